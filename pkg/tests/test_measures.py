import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from liocc.measures import (
    MeasureReport,
    c_L,
    c_L_mixed_upper,
    check_fannes,
    check_gentle,
    coherence_deficits,
    entanglement_entropy,
    measure_report,
    named_measure,
    qi_relative_entropy,
    relative_entropy_of_coherence,
)
from liocc.qcore import (
    HADAMARD,
    PLUS,
    DensityOperator,
    PureBipartiteState,
    basis_product,
    binary_entropy,
    ecobit,
    lambda_state,
    partial_trace,
    random_density,
    random_state,
    random_unitary,
    rng_for,
    six_term_state,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=5)

H_THIRD = 0.9182958340544896  # h(1/3)
H_TENTH = 0.4689955935892812  # h(0.1)


def _entropy_bits(p):
    # independent plain-python entropy oracle
    return -sum(x * math.log2(x) for x in p if x > 0)


@pytest.mark.parametrize(
    "state, expected",
    [(ecobit(), 1.0), (basis_product(0, 0), 0.0), (six_term_state(), H_THIRD)],
)
def test_entanglement_entropy(state, expected):
    assert abs(entanglement_entropy(state) - expected) <= 1e-12


def test_six_term_reduced_matrix_oracle():
    red = partial_trace(six_term_state(), "A").matrix
    assert np.allclose(red, [[0.5, 1 / 6], [1 / 6, 0.5]])
    assert abs(_entropy_bits([2 / 3, 1 / 3]) - H_THIRD) <= 1e-15


@pytest.mark.parametrize(
    "rho, expected",
    [
        (np.outer(PLUS, PLUS), 1.0),
        (np.diag([0.3, 0.2, 0.5]), 0.0),
        (np.outer([math.sqrt(0.9), math.sqrt(0.1)], [math.sqrt(0.9), math.sqrt(0.1)]), H_TENTH),
    ],
)
def test_relative_entropy_of_coherence(rho, expected):
    assert abs(relative_entropy_of_coherence(rho) - expected) <= 1e-9


def test_qi_relative_entropy_examples():
    assert abs(qi_relative_entropy(ecobit().density(), "A") - 1) <= 1e-9
    incoherent = DensityOperator(np.diag([0.1, 0.2, 0.3, 0.4]), dims=(2, 2))
    assert abs(qi_relative_entropy(incoherent, "A")) <= 1e-9
    # the dephased table has Y-marginal (1/4, 3/4) and a uniform X-marginal
    lam = lambda_state(0.25).density()
    assert abs(qi_relative_entropy(lam, "A") - binary_entropy(0.25)) <= 1e-9
    assert abs(qi_relative_entropy(lam, "B") - 1) <= 1e-9
    with pytest.raises(ValueError):
        qi_relative_entropy(DensityOperator(np.eye(4) / 4), "A")


@pytest.mark.parametrize(
    "state, expected",
    [
        (ecobit(), 1.0),
        (basis_product(0, 0), 0.0),
        (six_term_state(), 1 + math.log2(3) - H_THIRD),
    ],
)
def test_c_L_values(state, expected):
    assert abs(c_L(state) - expected) <= 1e-12


def test_six_term_c_L_frozen():
    assert abs(c_L(six_term_state()) - 1.6666666666666667) <= 1e-12


@given(seeds, dims, dims)
def test_c_L_lower_bound(seed, da, db):
    st_ = random_state(seed, da, db)
    rep = measure_report(st_)
    assert rep.C_L >= max(rep.S_X, rep.S_Y) - 1e-9


@given(seeds, dims, dims)
def test_report_invariants(seed, da, db):
    rep = measure_report(random_state(seed, da, db))
    assert abs(rep.S_XY - (rep.S_X + rep.S_Y_given_X)) <= 1e-9
    assert abs(rep.I_XY - (rep.S_X + rep.S_Y - rep.S_XY)) <= 1e-9
    assert rep.I_XY >= -1e-9
    assert abs(rep.C_L - (rep.S_X + rep.S_Y - rep.E)) <= 1e-9


def test_c_L_identity_sweep():
    # two routes: C_r^{A|B} of the full state plus C_r of Alice's marginal
    for seed in range(200):
        st_ = random_state(rng_for(seed, "identity"), 2 + seed % 3, 2 + seed % 2)
        rho = st_.density()
        via_a = qi_relative_entropy(rho, "A") + relative_entropy_of_coherence(partial_trace(rho, "A"))
        via_b = qi_relative_entropy(rho, "B") + relative_entropy_of_coherence(partial_trace(rho, "B"))
        assert abs(c_L(st_) - via_a) <= 1e-9
        assert abs(c_L(st_) - via_b) <= 1e-9


def test_qi_matches_pure_closed_form():
    for seed in range(50):
        st_ = random_state(seed, 3, 2)
        rep = measure_report(st_)
        assert abs(qi_relative_entropy(st_.density(), "A") - rep.S_Y) <= 1e-9


@given(seeds, st.integers(min_value=2, max_value=5))
def test_coherence_invariant_under_incoherent_unitaries(seed, dim):
    rng = rng_for(seed)
    rho = random_density(rng, dim).matrix
    perm = np.eye(dim)[rng.permutation(dim)]
    phases = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, dim)))
    u = phases @ perm
    assert abs(relative_entropy_of_coherence(u @ rho @ u.conj().T) - relative_entropy_of_coherence(rho)) <= 1e-9


def test_hadamard_raises_c_L():
    before = basis_product(0, 0)
    after = PureBipartiteState.from_matrix(HADAMARD @ before.matrix)
    assert c_L(before) == 0.0
    assert abs(c_L(after) - 1) <= 1e-12


def test_c_L_zero_only_on_basis_products():
    assert c_L(basis_product(1, 2, 3, 3)) == 0.0
    assert c_L(PureBipartiteState.product(PLUS, [1, 0])) > 0.5


# --------------------------------------------------------------------------- deficits


@pytest.mark.parametrize(
    "state, delta, delta_c",
    [(ecobit(), 0.0, 1.0), (basis_product(0, 0), 0.0, 0.0), (six_term_state(), H_THIRD, H_THIRD)],
)
def test_deficit_examples(state, delta, delta_c):
    rep = coherence_deficits(state)
    assert abs(rep.delta - delta) <= 1e-9
    assert abs(rep.delta_c - delta_c) <= 1e-9


def test_deficits_nonnegative_sweep():
    for seed in range(200):
        rep = coherence_deficits(random_state(seed, 3, 3))
        assert rep.delta >= -1e-9 and rep.delta_c >= -1e-9
        assert abs(rep.C_D_global - rep.C_D_liocc - rep.delta) <= 1e-9


def test_named_measure():
    st_ = six_term_state()
    assert named_measure(st_, "C_L") == c_L(st_)
    assert named_measure(st_, "C_r_AgivenB") == measure_report(st_).C_r_AgivenB
    with pytest.raises(ValueError):
        named_measure(st_, "nonsense")


def test_report_json_fields():
    keys = set(measure_report(ecobit()).to_json())
    assert keys == set(MeasureReport.__dataclass_fields__)
    assert {"E", "S_X", "I_XY", "C_L", "delta_nonlocal", "delta_classical"} <= keys


# --------------------------------------------------------------------------- convex roof


def test_c_L_mixed_pure_input():
    st_ = random_state(5, 2, 3)
    assert abs(c_L_mixed_upper(st_.density(), budget=5) - c_L(st_)) <= 1e-9


def test_c_L_mixed_incoherent():
    sigma = DensityOperator(np.diag([0.1, 0.2, 0.3, 0.4]), dims=(2, 2))
    assert abs(c_L_mixed_upper(sigma, budget=5)) <= 1e-9


def test_c_L_mixed_defining_ensemble():
    k00 = basis_product(0, 0).amps
    phi = ecobit().amps
    rho = DensityOperator(0.5 * np.outer(k00, k00.conj()) + 0.5 * np.outer(phi, phi.conj()), dims=(2, 2))
    ens = [(0.5, k00), (0.5, phi)]
    val = c_L_mixed_upper(rho, budget=20, seed=1, candidates=[ens])
    assert val <= 0.5 + 1e-9


def test_c_L_mixed_monotone_in_budget():
    rho = random_density(3, 4, rank=2, dims=(2, 2))
    vals = [c_L_mixed_upper(rho, budget=b, seed=0, refine_steps=5) for b in (0, 2, 8)]
    assert vals[0] >= vals[1] >= vals[2]


def test_c_L_mixed_rejects_bad_candidate():
    rho = DensityOperator(np.eye(4) / 4, dims=(2, 2))
    with pytest.raises(ValueError):
        c_L_mixed_upper(rho, budget=0, candidates=[[(1.0, ecobit().amps)]])


# --------------------------------------------------------------------------- inequality oracles


def test_fannes_trivial():
    rho = random_density(1, 4)
    assert check_fannes(rho, rho)


def test_gentle_identity():
    rho = random_density(1, 3)
    assert check_gentle(rho, np.eye(3), 0.0)


def _random_effect(rng, dim):
    u = random_unitary(rng, dim)
    w = rng.uniform(0, 1, dim)
    w[rng.integers(dim)] = 1.0
    return (u * w) @ u.conj().T


@given(seeds, st.integers(min_value=2, max_value=16))
def test_fannes_property(seed, dim):
    rho = random_density(rng_for(seed, "r"), dim)
    sigma = random_density(rng_for(seed, "s"), dim)
    assert check_fannes(rho, sigma)


@given(seeds, st.integers(min_value=2, max_value=16))
def test_gentle_property(seed, dim):
    rng = rng_for(seed)
    rho = random_density(rng, dim).matrix
    x = _random_effect(rng, dim)
    eps = max(0.0, 1 - np.trace(rho @ x).real)
    assert check_gentle(rho, x, eps)


def test_gentle_precondition_errors():
    rho = np.eye(2) / 2
    with pytest.raises(ValueError):
        check_gentle(rho, 2 * np.eye(2), 0.1)
    with pytest.raises(ValueError):
        check_gentle(rho, np.diag([1, 0]), 0.1)
    with pytest.raises(ValueError):
        check_gentle(rho, np.array([[1, 1], [0, 1]]), 0.5)


def test_fannes_near_tight_qubit():
    # d = 2 reduces to |S(rho) - S(sigma)| <= h(T)
    rho, sigma = np.diag([1.0, 0.0]), np.diag([0.9, 0.1])
    assert abs(binary_entropy(0.1) - 0.4689955935892812) <= 1e-15
    assert check_fannes(rho, sigma)
