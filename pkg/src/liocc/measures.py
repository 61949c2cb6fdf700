"""Entropic measures of coherence and entanglement, and inequality checkers.

Relative-entropy quantities use their closed forms, e.g. the relative
entropy of coherence is S(Delta(rho)) - S(rho); no optimisation over free
states is performed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .qcore import (
    PureBipartiteState,
    VerificationError,
    as_density,
    binary_entropy,
    dephase,
    dephased_distribution,
    random_unitary,
    rng_for,
    schmidt_decompose,
    shannon_entropy,
    trace_distance,
    trace_norm,
    von_neumann_entropy,
)

IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class MeasureReport:
    E: float
    S_X: float
    S_Y: float
    S_XY: float
    S_Y_given_X: float
    S_X_given_Y: float
    I_XY: float
    C_r_full: float
    C_r_A: float
    C_r_B: float
    C_r_AgivenB: float
    C_r_BgivenA: float
    C_L: float
    delta_nonlocal: float
    delta_classical: float

    def to_json(self) -> dict:
        return asdict(self)


def entanglement_entropy(state: PureBipartiteState) -> float:
    return shannon_entropy(schmidt_decompose(state).coefficients)


def dephased_entropies(state: PureBipartiteState) -> dict[str, float]:
    """S(X), S(Y), S(XY) and the derived conditional/mutual terms of Delta(psi)."""
    p = dephased_distribution(state)
    s_x = shannon_entropy(p.sum(axis=1))
    s_y = shannon_entropy(p.sum(axis=0))
    s_xy = shannon_entropy(p)
    return {
        "S_X": s_x,
        "S_Y": s_y,
        "S_XY": s_xy,
        "S_Y_given_X": s_xy - s_x,
        "S_X_given_Y": s_xy - s_y,
        "I_XY": s_x + s_y - s_xy,
    }


def mutual_information_dephased(state: PureBipartiteState) -> float:
    return dephased_entropies(state)["I_XY"]


def relative_entropy_of_coherence(rho) -> float:
    rho = as_density(rho)
    return von_neumann_entropy(dephase(rho, "full")) - von_neumann_entropy(rho)


def qi_relative_entropy(rho, helper: str = "A") -> float:
    """Quantum-incoherent relative entropy; the non-helper party is dephased.

    ``helper='A'`` gives C_r^{A|B} = S(Delta_B(rho)) - S(rho).
    """
    rho = as_density(rho)
    rho.require_split()
    if helper == "A":
        dephased = dephase(rho, "B")
    elif helper == "B":
        dephased = dephase(rho, "A")
    else:
        raise ValueError("helper must be 'A' or 'B'")
    return von_neumann_entropy(dephased) - von_neumann_entropy(rho)


def c_L(state: PureBipartiteState) -> float:
    """S(X) + S(Y) - E for a pure state."""
    ent = dephased_entropies(state)
    return ent["S_X"] + ent["S_Y"] - entanglement_entropy(state)


def measure_report(state: PureBipartiteState) -> MeasureReport:
    ent = dephased_entropies(state)
    e = entanglement_entropy(state)
    cl = ent["S_X"] + ent["S_Y"] - e
    return MeasureReport(
        E=e,
        C_r_full=ent["S_XY"],
        C_r_A=ent["S_X"] - e,
        C_r_B=ent["S_Y"] - e,
        C_r_AgivenB=ent["S_Y"],
        C_r_BgivenA=ent["S_X"],
        C_L=cl,
        delta_nonlocal=e - ent["I_XY"],
        delta_classical=e,
        **ent,
    )


def named_measure(state: PureBipartiteState, name: str) -> float:
    """Look up one of 'C_L', 'E', 'C_r_AgivenB', 'C_r_BgivenA' (or any report field)."""
    if name == "C_L":
        return c_L(state)
    if name == "E":
        return entanglement_entropy(state)
    report = measure_report(state)
    try:
        return getattr(report, name)
    except AttributeError:
        raise ValueError(f"unknown measure {name!r}") from None


# --------------------------------------------------------------------------- convex roof


def _ensemble_from_isometry(eigvals, eigvecs, iso) -> tuple[np.ndarray, np.ndarray]:
    """Ensemble {p_k, phi_k} with sqrt(p_k) phi_k = sum_i iso[k, i] sqrt(l_i) e_i."""
    unnorm = iso @ (np.sqrt(eigvals)[:, None] * eigvecs.T)
    probs = np.sum(np.abs(unnorm) ** 2, axis=1)
    return probs, unnorm


def _ensemble_value(unnorm, probs, dims) -> float:
    total = 0.0
    for vec, p in zip(unnorm, probs):
        if p < 1e-14:
            continue
        total += p * c_L(PureBipartiteState(dims[0], dims[1], vec / math.sqrt(p)))
    return total


def ensemble_c_L(ensemble, dims) -> float:
    """Average C_L of an explicit ensemble [(p_k, ket_k), ...]."""
    return sum(
        p * c_L(PureBipartiteState(dims[0], dims[1], np.asarray(v) / np.linalg.norm(v)))
        for p, v in ensemble
        if p > 0
    )


def c_L_mixed_upper(
    rho,
    budget: int = 200,
    seed: int = 0,
    extra_outcomes: int = 2,
    refine_steps: int = 20,
    candidates=None,
) -> float:
    """Upper bound on the convex roof of C_L by ensemble search.

    Every ensemble decomposition of rho with m members is U[:, :r] applied to
    the weighted eigenvectors, with U an m x m unitary. Each trial draws a
    Haar U (trial ``t`` seeded from ``(seed, t)``), then hill-climbs with small
    random rotations. The eigen-ensemble and any caller-supplied ``candidates``
    (lists of ``(p, ket)`` that must average to rho) are always evaluated, so
    the result is a valid upper bound and is non-increasing in ``budget``.
    """
    rho = as_density(rho)
    dims = rho.require_split()
    w, v = np.linalg.eigh(rho.matrix)
    keep = w > 1e-12
    w, v = w[keep], v[:, keep]
    w = w / w.sum()
    r = w.size
    probs, unnorm = _ensemble_from_isometry(w, v, np.eye(r))
    best = _ensemble_value(unnorm, probs, dims)

    for ens in candidates or []:
        mix = sum(p * np.outer(k, np.conj(k)) / np.vdot(k, k).real for p, k in ens)
        if np.max(np.abs(mix - rho.matrix)) > 1e-8:
            raise ValueError("candidate ensemble does not average to rho")
        best = min(best, ensemble_c_L(ens, dims))

    m = r + extra_outcomes
    for trial in range(budget):
        rng = rng_for(seed, "c_L_mixed_upper", trial)
        u = random_unitary(rng, m)
        probs, unnorm = _ensemble_from_isometry(w, v, u[:, :r])
        val = _ensemble_value(unnorm, probs, dims)
        for _ in range(refine_steps):
            h = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
            h = 0.05 * (h + h.conj().T)
            ev, evec = np.linalg.eigh(h)
            u_new = (evec * np.exp(1j * ev)) @ evec.conj().T @ u
            probs, unnorm = _ensemble_from_isometry(w, v, u_new[:, :r])
            new = _ensemble_value(unnorm, probs, dims)
            if new < val:
                u, val = u_new, new
        best = min(best, val)
    return best


# --------------------------------------------------------------------------- deficits


@dataclass(frozen=True)
class DeficitReport:
    delta: float
    delta_c: float
    C_D_global: float
    C_D_liocc: float
    C_D_lio: float

    def to_json(self) -> dict:
        return asdict(self)


def coherence_deficits(state: PureBipartiteState, tol: float = IDENTITY_TOL) -> DeficitReport:
    """Nonlocal and LIOCC coherence deficits of a pure state.

    Computed from the three optimal rate sums and cross-checked against the
    closed forms delta = E - I(X:Y) and delta_c = E.
    """
    ent = dephased_entropies(state)
    e = entanglement_entropy(state)
    glob = ent["S_XY"]
    liocc = ent["S_X"] + ent["S_Y"] - e
    lio = ent["S_X"] + ent["S_Y"] - 2 * e
    delta, delta_c = glob - liocc, liocc - lio
    if abs(delta - (e - ent["I_XY"])) > tol or abs(delta_c - e) > tol:
        raise VerificationError(
            f"deficit identities violated: delta={delta}, E-I={e - ent['I_XY']}, delta_c={delta_c}, E={e}"
        )
    return DeficitReport(delta, delta_c, glob, liocc, lio)


# --------------------------------------------------------------------------- inequality oracles


def fannes_bound(rho, sigma) -> tuple[float, float]:
    """(|S(rho) - S(sigma)|, T log(d-1) + h(T)) with T the trace distance."""
    a, b = as_density(rho), as_density(sigma)
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    t = trace_distance(a, b)
    lhs = abs(von_neumann_entropy(a) - von_neumann_entropy(b))
    rhs = (t * math.log2(a.dim - 1) if a.dim > 1 else 0.0) + binary_entropy(t)
    return lhs, rhs


def check_fannes(rho, sigma, tol: float = 1e-9) -> bool:
    lhs, rhs = fannes_bound(rho, sigma)
    return lhs <= rhs + tol


def check_gentle(rho, x_operator, eps: float, tol: float = 1e-9) -> bool:
    """Gentle-measurement bound ||rho - sqrt(X) rho sqrt(X)||_1 <= sqrt(8 eps)."""
    rho_m = as_density(rho).matrix
    x = np.asarray(x_operator, dtype=complex)
    if x.shape != rho_m.shape:
        raise ValueError("dimension mismatch")
    if np.max(np.abs(x - x.conj().T)) > 1e-10:
        raise ValueError("X must be Hermitian")
    wx, vx = np.linalg.eigh((x + x.conj().T) / 2)
    if wx[0] < -tol or wx[-1] > 1 + tol:
        raise ValueError("X must satisfy 0 <= X <= I")
    if np.trace(rho_m @ x).real < 1 - eps - tol:
        raise ValueError("tr(rho X) < 1 - eps")
    sqrt_x = (vx * np.sqrt(np.clip(wx, 0, 1))) @ vx.conj().T
    lhs = trace_norm(rho_m - sqrt_x @ rho_m @ sqrt_x)
    return lhs <= math.sqrt(8 * max(eps, 0.0)) + tol
