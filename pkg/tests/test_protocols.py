import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from liocc.incoherent import run_protocol, validate_incoherent
from liocc.measures import entanglement_entropy, relative_entropy_of_coherence
from liocc.protocols import (
    bell_basis,
    birkhoff_decompose,
    cobits_for,
    construct_doubly_stochastic,
    controlled_unitary_via_cobits,
    conversion_kraus,
    dilution_rate_check,
    ecobit_to_cobit,
    majorization_transform,
    majorizes,
    prepare_max_coherent,
    run_ecobit_to_cobit,
    shift_phase,
    unitary_via_cobits,
)
from liocc.qcore import (
    HADAMARD,
    PLUS,
    PureBipartiteState,
    basis_product,
    ecobit,
    max_coherent,
    maximally_correlated,
    partial_trace,
    pure_fidelity,
    random_ket,
    random_state,
    random_unitary,
    rng_for,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _partial_sums_oracle(x, y):
    # plain python: every sorted partial sum of y dominates that of x
    n = max(len(x), len(y))
    xs = sorted(list(x) + [0.0] * (n - len(x)), reverse=True)
    ys = sorted(list(y) + [0.0] * (n - len(y)), reverse=True)
    sx = sy = 0.0
    for a, b in zip(xs, ys):
        sx, sy = sx + a, sy + b
        if sy < sx - 1e-9:
            return False
    return True


# --------------------------------------------------------------------------- eCoBit -> CoBit


def test_ecobit_to_cobit_on_ecobit():
    out = run_ecobit_to_cobit(ecobit())
    assert [o for o, _, _ in out] == [0, 1]
    for outcome, p, post in out:
        assert abs(p - 0.5) <= 1e-12
        assert abs(pure_fidelity(post.amps, np.kron(np.eye(2)[outcome], PLUS)) - 1) <= 1e-10


def test_ecobit_to_cobit_on_product():
    # Alice's two outcomes are equally likely on |0>; Bob stays in |0> on both
    out = run_ecobit_to_cobit(basis_product(0, 0))
    assert len(out) == 2
    for outcome, p, post in out:
        assert abs(p - 0.5) <= 1e-12
        assert abs(pure_fidelity(post.amps, np.kron(np.eye(2)[outcome], [1, 0])) - 1) <= 1e-12


def test_ecobit_to_cobit_measures():
    before_e = entanglement_entropy(ecobit())
    out = run_ecobit_to_cobit(ecobit())
    after_e = sum(p * entanglement_entropy(s) for _, p, s in out)
    bob = [relative_entropy_of_coherence(partial_trace(s, "B")) for _, _, s in out]
    assert abs(before_e - 1) <= 1e-12 and abs(after_e) <= 1e-12
    assert abs(relative_entropy_of_coherence(partial_trace(ecobit(), "B"))) <= 1e-12
    assert all(abs(b - 1) <= 1e-10 for b in bob)


def test_ecobit_to_cobit_wrong_dims():
    with pytest.raises(ValueError):
        run_ecobit_to_cobit(random_state(0, 3, 2))


def test_ecobit_protocol_is_incoherent():
    for step in ecobit_to_cobit():
        for inst in step.instruments():
            assert inst.is_incoherent


# --------------------------------------------------------------------------- unitary via CoBits


@pytest.mark.parametrize("d, m", [(1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (8, 3)])
def test_cobits_for(d, m):
    assert cobits_for(d) == m


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_bell_basis_orthonormal(d):
    basis = np.array(list(bell_basis(d).values()))
    assert np.allclose(basis @ basis.conj().T, np.eye(d * d), atol=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_shift_phase_unitary(d):
    for j, k in itertools.product(range(d), repeat=2):
        w = shift_phase(j, k, d)
        assert np.allclose(w.conj().T @ w, np.eye(d))
        assert validate_incoherent(w)[0]


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_prepare_max_coherent(d):
    steps, target = prepare_max_coherent(d)
    assert np.allclose(target, max_coherent(d))
    for step in steps:
        assert all(validate_incoherent(k)[0] for k in step)


def test_hadamard_on_zero():
    sim = unitary_via_cobits(HADAMARD, [1, 0])
    assert len(sim.branches) == 4 and sim.cobits == 1
    for out in sim.outputs.values():
        assert abs(pure_fidelity(out, PLUS) - 1) <= 1e-12


@pytest.mark.parametrize("d", [2, 3, 4])
def test_identity_unitary(d):
    psi = random_ket(d, d)
    sim = unitary_via_cobits(np.eye(d), psi)
    assert len(sim.outputs) == d * d
    for out in sim.outputs.values():
        assert abs(pure_fidelity(out, psi) - 1) <= 1e-12


@given(seeds, st.integers(min_value=2, max_value=4))
def test_unitary_via_cobits_property(seed, d):
    u = random_unitary(rng_for(seed, "u"), d)
    psi = random_ket(rng_for(seed, "psi"), d)
    sim = unitary_via_cobits(u, psi)
    direct = u @ psi
    for out in sim.outputs.values():
        assert pure_fidelity(out, direct) >= 1 - 1e-9
    assert sim.all_incoherent
    assert all(abs(p - 1 / d**2) <= 1e-9 for _, _, p, _ in sim.branches)
    assert sim.cobits == math.ceil(math.log2(d))


def test_unitary_process_fidelity():
    # the outcome-averaged channel acts as U on half of a maximally entangled pair
    d = 3
    u = random_unitary(17, d)
    psi = np.eye(d) / math.sqrt(d)  # system rows, reference columns
    sim = unitary_via_cobits(u, psi)
    choi = (u @ psi).reshape(-1)
    avg = sum(p * np.outer(sim.outputs[(j, k)].reshape(-1), sim.outputs[(j, k)].reshape(-1).conj()) for j, k, p, _ in sim.branches)
    assert np.vdot(choi, avg @ choi).real >= 1 - 1e-9


def test_controlled_unitary():
    rng = rng_for(3)
    us = [random_unitary(rng, 2), random_unitary(rng, 2), np.eye(2)]
    psi = random_ket(rng, 6)
    sim = controlled_unitary_via_cobits(us, psi)
    blocks = psi.reshape(3, 2)
    target = np.concatenate([us[r] @ blocks[r] for r in range(3)])
    assert sim.all_incoherent and sim.cobits == 1
    for out in sim.outputs.values():
        assert pure_fidelity(out, target) >= 1 - 1e-9


def test_teleport_kraus_incoherent():
    sim = unitary_via_cobits(random_unitary(1, 3), random_ket(1, 3))
    for m in sim.kraus.values():
        ok, _ = validate_incoherent(m)
        assert ok
        assert np.linalg.matrix_rank(m) == 1


def test_non_unitary_rejected():
    with pytest.raises(ValueError):
        unitary_via_cobits(np.array([[1, 1], [0, 1]]), [1, 0])
    with pytest.raises(ValueError):
        unitary_via_cobits(np.eye(2), [1, 1])


# --------------------------------------------------------------------------- majorization


@pytest.mark.parametrize(
    "x, y, expected",
    [
        ((0.5, 0.5), (1, 0), True),
        ((1, 0), (0.5, 0.5), False),
        ((0.4, 0.35, 0.25), (0.5, 0.3, 0.2), True),
        ((0.25,) * 4, (0.5, 0.5), True),
        ((0.6, 0.4), (0.5, 0.3, 0.2), False),
    ],
)
def test_majorizes_examples(x, y, expected):
    assert majorizes(x, y) is expected
    assert _partial_sums_oracle(x, y) is expected


@given(seeds, st.integers(min_value=1, max_value=6), st.integers(min_value=1, max_value=6))
def test_majorizes_matches_oracle(seed, n, m):
    rng = rng_for(seed)
    x, y = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(m) * 0.5)
    assert majorizes(x, y) == _partial_sums_oracle(x, y)


def test_majorizes_rejects_unnormalized():
    with pytest.raises(ValueError):
        majorizes((0.5, 0.6), (1, 0))


def test_doubly_stochastic_examples():
    assert np.allclose(construct_doubly_stochastic((0.3, 0.7), (0.3, 0.7)), np.eye(2))
    assert np.allclose(construct_doubly_stochastic((0.5, 0.5), (1, 0)), np.full((2, 2), 0.5))
    with pytest.raises(ValueError):
        construct_doubly_stochastic((1, 0), (0.5, 0.5))


def _majorized_pair(rng, n):
    y = rng.dirichlet(np.ones(n) * 0.7)
    perms = [np.eye(n)[rng.permutation(n)] for _ in range(4)]
    w = rng.dirichlet(np.ones(4))
    x = sum(a * p for a, p in zip(w, perms)) @ y
    return x, y


def test_doubly_stochastic_random_pairs():
    for trial in range(200):
        rng = rng_for(11, trial)
        x, y = _majorized_pair(rng, int(rng.integers(2, 7)))
        d = construct_doubly_stochastic(x, y)
        assert np.all(d >= -1e-12)
        assert np.allclose(d.sum(0), 1, atol=1e-9) and np.allclose(d.sum(1), 1, atol=1e-9)
        assert np.max(np.abs(d @ y - x)) <= 1e-8


def test_birkhoff_examples():
    perm = np.eye(4)[[1, 3, 0, 2]]
    dec = birkhoff_decompose(perm)
    assert len(dec) == 1 and abs(dec.weights[0] - 1) <= 1e-12
    dec = birkhoff_decompose(np.full((2, 2), 0.5))
    assert np.allclose(sorted(dec.weights), [0.5, 0.5])
    mats = {tuple(p.ravel()) for p in dec.permutations}
    assert mats == {tuple(np.eye(2).ravel()), tuple(np.eye(2)[[1, 0]].ravel())}


def test_birkhoff_random_5x5():
    for trial in range(20):
        rng = rng_for(5, trial)
        w = rng.dirichlet(np.ones(10))
        d = sum(a * np.eye(5)[rng.permutation(5)] for a in w)
        dec = birkhoff_decompose(d)
        assert len(dec) <= 17
        assert np.max(np.abs(dec.reconstruct() - d)) <= 1e-8
        assert all(a > 0 for a in dec.weights) and abs(sum(dec.weights) - 1) <= 1e-12


def test_birkhoff_rejects_non_stochastic():
    with pytest.raises(ValueError):
        birkhoff_decompose(np.array([[0.5, 0.6], [0.5, 0.4]]))


@given(seeds, st.integers(min_value=2, max_value=6))
def test_round_trip_construct_then_birkhoff(seed, n):
    x, y = _majorized_pair(rng_for(seed), n)
    dec = birkhoff_decompose(construct_doubly_stochastic(x, y))
    assert np.max(np.abs(dec.reconstruct() @ y - x)) <= 1e-8


@given(seeds, st.integers(min_value=2, max_value=5))
def test_conversion_kraus_complete_and_incoherent(seed, n):
    x, y = _majorized_pair(rng_for(seed), n)
    kraus, _, weights = conversion_kraus(x, y)
    total = sum(k.conj().T @ k for k in kraus)
    assert np.max(np.abs(total - np.eye(n))) <= 1e-8
    assert all(validate_incoherent(k)[0] for k in kraus)
    assert abs(sum(weights) - 1) <= 1e-12


def test_conversion_kraus_zero_source_entries():
    kraus, _, _ = conversion_kraus((0.5, 0.5, 0.0), (1.0, 0.0, 0.0))
    total = sum(k.conj().T @ k for k in kraus)
    assert np.max(np.abs(total - np.eye(3))) <= 1e-8


def test_majorize_identity():
    psi = maximally_correlated([0.6, 0.3, 0.1])
    _, rep = majorization_transform(psi, psi)
    assert rep.min_fidelity >= 1 - 1e-12
    assert abs(rep.total_probability - 1) <= 1e-12


def test_majorize_ecobit_to_product():
    steps, rep = majorization_transform(ecobit(), basis_product(0, 0))
    assert rep.all_incoherent and rep.completeness_error <= 1e-8
    leaves = run_protocol(ecobit(), steps)
    for _, post in leaves:
        assert abs(pure_fidelity(post.amps, basis_product(0, 0).amps) - 1) <= 1e-8


def test_majorize_permuted_and_phased_inputs():
    rng = rng_for(8)
    m = np.zeros((3, 5), dtype=complex)
    m[2, 4], m[0, 1], m[1, 0] = 0.7, 0.5j, -math.sqrt(1 - 0.49 - 0.25)
    psi = PureBipartiteState.from_matrix(m)
    t = np.zeros((3, 5), dtype=complex)
    t[1, 3], t[0, 2] = math.sqrt(0.8) * np.exp(1j * rng.uniform(0, 6)), math.sqrt(0.2)
    phi = PureBipartiteState.from_matrix(t)
    _, rep = majorization_transform(psi, phi)
    assert rep.min_fidelity >= 1 - 1e-8


def test_majorize_rejects_wrong_direction():
    with pytest.raises(ValueError):
        majorization_transform(basis_product(0, 0), ecobit())


def test_majorize_rejects_coherent_schmidt_basis():
    plus_plus = PureBipartiteState.product(PLUS, PLUS)
    with pytest.raises(ValueError):
        majorization_transform(plus_plus, basis_product(0, 0))


def test_majorize_rejects_dim_mismatch():
    with pytest.raises(ValueError):
        majorization_transform(ecobit(), basis_product(0, 0, 3, 2))


@given(seeds, st.integers(min_value=2, max_value=5))
def test_majorize_random_pairs(seed, n):
    x, y = _majorized_pair(rng_for(seed), n)
    psi, phi = maximally_correlated(x), maximally_correlated(y)
    steps, rep = majorization_transform(psi, phi)
    assert rep.completeness_error <= 1e-8 and rep.all_incoherent
    assert rep.min_fidelity >= 1 - 1e-8
    assert abs(rep.total_probability - 1) <= 1e-8
    # re-run the emitted protocol as an independent check
    for _, post in run_protocol(psi, steps):
        assert pure_fidelity(post.amps, phi.amps) >= 1 - 1e-8


# --------------------------------------------------------------------------- dilution


@pytest.mark.parametrize(
    "psi, rate",
    [
        (PLUS, 1.0),
        ([1, 0], 0.0),
        ([math.sqrt(0.9), math.sqrt(0.1)], 0.4689955935892812),
    ],
)
def test_dilution_rate(psi, rate):
    assert abs(dilution_rate_check(psi).rate - rate) <= 1e-12


def test_dilution_typical_size_bound():
    rep = dilution_rate_check([math.sqrt(0.9), math.sqrt(0.1)], n=20, delta=0.05)
    assert rep.typical_size <= rep.size_upper_bound
    assert rep.typical_size > 0
