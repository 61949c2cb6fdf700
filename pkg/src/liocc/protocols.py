"""Explicit LIOCC protocols executed on concrete states.

Contents
--------
* ``ecobit_to_cobit``: turn a shared eCoBit into a CoBit on Bob's side.
* ``unitary_via_cobits``: implement an arbitrary unitary with incoherent
  operations and ceil(log2 d) CoBits (teleportation through a generalized
  Bell measurement whose Kraus operators have rank one onto basis states).
* ``majorizes`` / ``construct_doubly_stochastic`` / ``birkhoff_decompose``.
* ``majorization_transform``: deterministic pure-state conversion between
  states with incoherent Schmidt bases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .incoherent import (
    IncoherentInstrument,
    ProtocolStep,
    run_protocol,
    validate_incoherent,
)
from .qcore import (
    PAULI_Z,
    MINUS,
    PLUS,
    PureBipartiteState,
    VerificationError,
    kron_all,
    max_coherent,
    pure_fidelity,
    shannon_entropy,
)

UNITARY_TOL = 1e-10
MAJ_TOL = 1e-9


def cobits_for(dim: int) -> int:
    return max(0, math.ceil(math.log2(dim))) if dim > 1 else 0


# --------------------------------------------------------------------------- eCoBit -> CoBit


def ecobit_to_cobit() -> list[ProtocolStep]:
    """Alice measures {|0><+|, |1><-|}; Bob applies Z iff Alice saw 1."""
    alice = IncoherentInstrument((np.outer([1, 0], PLUS.conj()), np.outer([0, 1], MINUS.conj())), "A", "ecobit-measure")
    bob_id = IncoherentInstrument((np.eye(2),), "B", "identity")
    bob_z = IncoherentInstrument((PAULI_Z,), "B", "sigma_z")
    return [ProtocolStep("A", alice), ProtocolStep("B", branches={(0,): bob_id, (1,): bob_z})]


def run_ecobit_to_cobit(state: PureBipartiteState):
    """Execute :func:`ecobit_to_cobit`; returns ``[(outcome, prob, post_state), ...]``."""
    if state.dims != (2, 2):
        raise ValueError(f"ecobit_to_cobit needs a 2x2 input, got {state.dims}")
    leaves = run_protocol(state, ecobit_to_cobit())
    return [(tr.prefix[0], tr.probability, st) for tr, st in leaves]


# --------------------------------------------------------------------------- unitary via CoBits


def shift_phase(j: int, k: int, d: int) -> np.ndarray:
    """W_jk = sum_l tau^(l j) |k+l><l| with tau = exp(2 pi i / d)."""
    w = np.zeros((d, d), dtype=complex)
    tau = np.exp(2j * np.pi / d)
    for l in range(d):
        w[(k + l) % d, l] = tau ** (l * j)
    return w


def bell_basis(d: int) -> dict:
    """Generalized Bell vectors b_jk = (I (x) W_jk) Phi^(d), keyed by (j, k)."""
    phi = np.eye(d).reshape(-1) / math.sqrt(d)
    return {(j, k): np.kron(np.eye(d), shift_phase(j, k, d)) @ phi for j in range(d) for k in range(d)}


def teleport_kraus(unitaries, d: int) -> dict:
    """Kraus operators M_jk = sum_r |r><r| (x) |jk><b_jk| (U_r (x) I) on C S S'.

    With a single unitary the control register is one-dimensional.
    """
    c = len(unitaries)
    out = {}
    for (j, k), b in bell_basis(d).items():
        row = np.zeros(d * d, dtype=complex)
        row[j * d + k] = 1
        proj = np.outer(row, b.conj())
        out[(j, k)] = sum(
            np.kron(np.outer(np.eye(c)[r], np.eye(c)[r]), proj @ np.kron(u, np.eye(d)))
            for r, u in enumerate(unitaries)
        )
    return out


def _is_unitary(u: np.ndarray) -> bool:
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=UNITARY_TOL)


@dataclass
class UnitarySimulation:
    """Branch-wise record of a simulated (controlled) unitary.

    ``branches`` holds ``(j, k, probability, fidelity)``; ``outputs`` the
    corrected output (rows index the system, columns a reference if present).
    """

    dim: int
    cobits: int
    branches: list
    outputs: dict
    kraus: dict
    preparation: list
    all_incoherent: bool
    ledger: dict = field(default_factory=dict)

    @property
    def min_fidelity(self) -> float:
        return min(b[3] for b in self.branches)

    def outcome_tv(self) -> float:
        """Total-variation distance of the outcome distribution from uniform."""
        return 0.5 * sum(abs(b[2] - 1 / self.dim**2) for b in self.branches)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "cobits": self.cobits,
            "all_incoherent": self.all_incoherent,
            "min_fidelity": self.min_fidelity,
            "outcome_tv": self.outcome_tv(),
            "branches": [{"j": j, "k": k, "probability": p, "fidelity": f} for j, k, p, f in self.branches],
        }


def prepare_max_coherent(dim: int) -> tuple[list, np.ndarray]:
    """Turn ceil(log2 dim) CoBits into the d-level maximally coherent state.

    The uniform distribution on 2^m levels is majorized by the uniform one on
    ``dim`` levels, so the majorization Kraus set does it deterministically;
    a final incoherent fold relabels the empty upper levels. Returns the
    Kraus sets used and the verified output vector.
    """
    m = cobits_for(dim)
    big = 2**m
    src = kron_all([PLUS] * m) if m else np.ones(1, dtype=complex)
    tgt = np.zeros(big)
    tgt[:dim] = 1 / dim
    kraus, _, _ = conversion_kraus(np.full(big, 1 / big), tgt)
    steps = [kraus]
    outputs = [k @ src for k in kraus]
    fold = [np.eye(big)[:dim], np.zeros((dim, big))]
    fold[1][: big - dim, dim:] = np.eye(big - dim)
    steps.append([f for f in fold if f.any()])
    target = max_coherent(dim)
    for v in outputs:
        p = np.vdot(v, v).real
        out = steps[-1][0] @ v / math.sqrt(p)
        if abs(np.vdot(target, out)) ** 2 < 1 - 1e-10:
            raise VerificationError("CoBit preparation did not reach the maximally coherent state")
    return steps, target


def controlled_unitary_via_cobits(unitaries, psi) -> UnitarySimulation:
    """Apply sum_r |r><r| (x) U_r to ``psi`` on C (x) S.

    ``psi`` has shape ``(c*d,)`` or ``(c*d, r)`` (columns: a reference system
    that is carried along untouched). The output lives on C (x) S''.
    """
    us = [np.asarray(u, dtype=complex) for u in unitaries]
    if not us:
        raise ValueError("need at least one unitary")
    d = us[0].shape[0]
    for u in us:
        if u.shape != (d, d) or not _is_unitary(u):
            raise ValueError("every U must be a d x d unitary within 1e-10")
    c = len(us)
    psi = np.asarray(psi, dtype=complex)
    vec_input = psi.ndim == 1
    psi = psi.reshape(c * d, -1)
    if abs(np.linalg.norm(psi) - 1) > 1e-9:
        raise ValueError("psi must be normalized")
    ref = psi.shape[1]

    prep_steps, mc = prepare_max_coherent(d)
    # copy |l> -> |l>|l> turns the coherent register into Phi^(d) on S'S''
    copy = np.zeros((d * d, d))
    for l in range(d):
        copy[l * d + l, l] = 1
    pair = copy @ mc
    kraus = teleport_kraus(us, d)
    ops_to_check = [k for step in prep_steps for k in step] + [copy] + list(kraus.values())

    # full register C S S' S'' (x) R, row-major
    full = np.einsum("ar,p->apr", psi, pair).reshape(c * d * d * d, ref)
    target = np.vstack([us[r] @ psi[r * d : (r + 1) * d] for r in range(c)])

    branches, outputs = [], {}
    for (j, k), m in kraus.items():
        out = np.kron(m, np.eye(d)) @ full  # rows: C, j, k, S''
        out = out.reshape(c, d * d, d, ref)[:, j * d + k]  # other outcome rows are zero
        p = float(np.sum(np.abs(out) ** 2))
        corr = shift_phase(j, k, d).T
        ops_to_check.append(corr)
        fixed = np.einsum("st,ctr->csr", corr, out).reshape(c * d, ref) / math.sqrt(p)
        fid = pure_fidelity(fixed.reshape(-1), target.reshape(-1))
        branches.append((j, k, p, fid))
        outputs[(j, k)] = fixed.reshape(-1) if vec_input else fixed
    ok = all(validate_incoherent(k)[0] for k in ops_to_check)
    m = cobits_for(d)
    return UnitarySimulation(
        dim=d,
        cobits=m,
        branches=branches,
        outputs=outputs,
        kraus=kraus,
        preparation=prep_steps,
        all_incoherent=ok,
        ledger={"cobits_consumed": m, "unitaries": c},
    )


def unitary_via_cobits(u, psi) -> UnitarySimulation:
    """Simulate ``u`` on ``psi`` with incoherent operations and CoBits.

    Examples
    --------
    >>> from liocc.qcore import HADAMARD
    >>> sim = unitary_via_cobits(HADAMARD, [1, 0])
    >>> round(sim.min_fidelity, 12), sim.cobits
    (1.0, 1)
    """
    return controlled_unitary_via_cobits([u], psi)


# --------------------------------------------------------------------------- majorization


def _pad(x, y):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = max(x.size, y.size)
    return np.pad(x, (0, n - x.size)), np.pad(y, (0, n - y.size))


def majorizes(x, y, tol: float = MAJ_TOL) -> bool:
    """True iff x is majorized by y (x < y): sorted partial sums of y dominate."""
    x, y = _pad(x, y)
    if abs(x.sum() - 1) > tol or abs(y.sum() - 1) > tol:
        raise ValueError("distributions must sum to 1")
    cx = np.cumsum(np.sort(x)[::-1])
    cy = np.cumsum(np.sort(y)[::-1])
    return bool(np.all(cy >= cx - tol))


def construct_doubly_stochastic(x, y, tol: float = MAJ_TOL) -> np.ndarray:
    """Doubly stochastic D with x = D y, as a product of at most n-1 T-transforms.

    Works on sorted copies. While x != y, take j the last index with
    y_j > x_j and k the first later index with x_k > y_k, and move
    min(y_j - x_j, x_k - y_k) of mass from y_j to y_k with the T-transform
    lam I + (1 - lam) Q_jk. Each step fixes at least one coordinate.
    """
    x, y = _pad(x, y)
    if not majorizes(x, y, tol):
        raise ValueError("majorization x < y does not hold")
    n = x.size
    px, py = np.argsort(-x, kind="stable"), np.argsort(-y, kind="stable")
    xs, ys = x[px], y[py].copy()
    d = np.eye(n)
    for _ in range(n):
        diff = ys - xs
        pos = np.flatnonzero(diff > tol)
        if pos.size == 0:
            break
        j = int(pos[-1])
        later = np.flatnonzero(-diff[j + 1 :] > tol)
        if later.size == 0:
            break
        k = j + 1 + int(later[0])
        delta = min(ys[j] - xs[j], xs[k] - ys[k])
        lam = 1 - delta / (ys[j] - ys[k])
        t = np.eye(n)
        t[j, j] = t[k, k] = lam
        t[j, k] = t[k, j] = 1 - lam
        ys = t @ ys
        d = t @ d
    # undo the sorting: x = Px^T xs, ys0 = Py y
    out = np.zeros((n, n))
    out[np.ix_(px, py)] = d
    if np.max(np.abs(out @ y - x)) > 1e-8:
        raise VerificationError("T-transform construction failed to reach x")
    return out


@dataclass(frozen=True)
class BirkhoffDecomposition:
    weights: tuple
    permutations: tuple  # each a 0/1 matrix

    def reconstruct(self) -> np.ndarray:
        return sum(w * p for w, p in zip(self.weights, self.permutations))

    def __len__(self) -> int:
        return len(self.weights)


def _check_doubly_stochastic(d: np.ndarray, tol: float = 1e-8) -> None:
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("matrix must be square")
    if d.min() < -tol or np.max(np.abs(d.sum(0) - 1)) > tol or np.max(np.abs(d.sum(1) - 1)) > tol:
        raise ValueError("matrix is not doubly stochastic")


def birkhoff_decompose(d, tol: float = 1e-12) -> BirkhoffDecomposition:
    """Greedy Birkhoff-von Neumann decomposition.

    Each round finds a perfect matching inside the positive support (maximum
    weight assignment with forbidden zero entries) and peels off the
    smallest matched entry, which zeroes at least one entry.
    """
    d = np.asarray(d, dtype=float)
    _check_doubly_stochastic(d)
    n = d.shape[0]
    res = np.clip(d, 0, None)
    weights, perms = [], []
    big = 1e6
    for _ in range(n * n + 1):
        res[res < tol] = 0
        if res.sum() < 1e-9:
            break
        cost = np.where(res > 0, -res, big)
        rows, cols = linear_sum_assignment(cost)
        vals = res[rows, cols]
        if np.any(vals <= 0):
            raise VerificationError("no perfect matching on the residual support")
        w = float(vals.min())
        p = np.zeros((n, n))
        p[rows, cols] = 1
        weights.append(w)
        perms.append(p)
        res = res - w * p
    total = sum(weights)
    weights = [w / total for w in weights]
    out = BirkhoffDecomposition(tuple(weights), tuple(perms))
    if np.max(np.abs(out.reconstruct() - d)) > 1e-8:
        raise VerificationError("Birkhoff reconstruction error above 1e-8")
    return out


def conversion_kraus(src, tgt) -> tuple[list, list]:
    """Incoherent Kraus set converting Schmidt/coherence weights ``src`` into ``tgt``.

    Requires src < tgt. With src = D tgt and D = sum p_a P_a, the operators are
    M_a = sqrt(p_a) (P_a^T o S) where S_ij = sqrt(tgt_i / src_j) and ``o``
    is the entrywise product. Columns with src_j = 0 use S_ij = 1 so the set
    stays complete on the whole space. Returns (Kraus list, permutations P_a,
    weights p_a).
    """
    src, tgt = _pad(src, tgt)
    d = construct_doubly_stochastic(src, tgt)
    bvn = birkhoff_decompose(d)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.sqrt(np.outer(tgt, 1 / src))
    s[:, src <= 0] = 1
    kraus = [math.sqrt(p) * (perm.T * s) for p, perm in zip(bvn.weights, bvn.permutations)]
    return kraus, list(bvn.permutations), list(bvn.weights)


def _canonical_form(state: PureBipartiteState, tol: float = 1e-10):
    """Local incoherent unitaries taking ``state`` to sum_i sqrt(l_i)|ii>, l sorted.

    Returns (U_A, U_B, l) or raises ValueError when the amplitude matrix is
    not monomial, i.e. the Schmidt bases are not incoherent.
    """
    m = state.matrix
    nz = np.abs(m) > tol
    if nz.sum(axis=0).max(initial=0) > 1 or nz.sum(axis=1).max(initial=0) > 1:
        raise ValueError("Schmidt bases are not incoherent (amplitude matrix is not monomial)")
    xs, ys = np.nonzero(nz)
    amps = m[xs, ys]
    order = np.argsort(-np.abs(amps), kind="stable")
    xs, ys, amps = xs[order], ys[order], amps[order]
    da, db = state.dims
    ua = np.zeros((da, da), dtype=complex)
    ub = np.zeros((db, db), dtype=complex)
    ua[np.arange(xs.size), xs] = 1
    ub[np.arange(ys.size), ys] = np.exp(-1j * np.angle(amps))
    for u, used, dim in ((ua, xs, da), (ub, ys, db)):
        free_rows = range(used.size, dim)
        free_cols = [c for c in range(dim) if c not in set(used.tolist())]
        for r, cidx in zip(free_rows, free_cols):
            u[r, cidx] = 1
    return ua, ub, np.abs(amps) ** 2


def _reduced_diagonal(state: PureBipartiteState, tol: float = 1e-9) -> bool:
    m = state.matrix
    ra, rb = m @ m.conj().T, m.T @ m.conj()
    off = lambda r: np.max(np.abs(r - np.diag(np.diag(r))))  # noqa: E731
    return off(ra) <= tol and off(rb) <= tol


@dataclass
class MajorizationReport:
    completeness_error: float
    all_incoherent: bool
    branches: list  # (alpha, probability, fidelity)
    terms: int

    @property
    def total_probability(self) -> float:
        return sum(b[1] for b in self.branches)

    @property
    def min_fidelity(self) -> float:
        return min(b[2] for b in self.branches)

    def to_json(self) -> dict:
        return {
            "completeness_error": self.completeness_error,
            "all_incoherent": self.all_incoherent,
            "terms": self.terms,
            "total_probability": self.total_probability,
            "min_fidelity": self.min_fidelity,
            "branches": [{"outcome": a, "probability": p, "fidelity": f} for a, p, f in self.branches],
        }


def majorization_transform(psi: PureBipartiteState, phi: PureBipartiteState, verify: bool = True):
    """Deterministic LIOCC conversion psi -> phi.

    Both states must have Schmidt bases inside the incoherent product basis and
    the squared Schmidt coefficients of phi must majorize those of psi.

    Protocol: both parties canonicalize psi with local incoherent unitaries,
    Alice measures {M_a} from :func:`conversion_kraus`, Bob undoes the
    permutation P_a, then both apply the inverse canonicalization of phi.

    Returns
    -------
    protocol : list of ProtocolStep
    report : MajorizationReport
    """
    if psi.dims != phi.dims:
        raise ValueError(f"dimension mismatch {psi.dims} vs {phi.dims}")
    for name, st in (("psi", psi), ("phi", phi)):
        if not _reduced_diagonal(st):
            raise ValueError(f"{name}: reduced density matrices are not diagonal in the incoherent bases")
    try:
        ua, ub, lp = _canonical_form(psi)
        va, vb, lf = _canonical_form(phi)
    except ValueError as exc:
        raise ValueError(f"precondition violated: {exc}") from None
    if not majorizes(lp, lf):
        raise ValueError("precondition violated: Schmidt coefficients of phi do not majorize those of psi")

    da, db = psi.dims
    n = min(da, db)
    src, tgt = _pad(lp, lf)
    src, tgt = np.pad(src, (0, n - src.size)), np.pad(tgt, (0, n - tgt.size))
    core, perms, weights = conversion_kraus(src, tgt)
    kraus_a, bob_fix = [], []
    for k, perm, w in zip(core, perms, weights):
        full = np.zeros((da, da), dtype=complex)
        full[:n, :n] = k
        # extra Alice levels carry no amplitude; sqrt(p_a) I keeps the set complete
        full[n:, n:] = math.sqrt(w) * np.eye(da - n)
        kraus_a.append(full)
        pb = np.eye(db, dtype=complex)
        pb[:n, :n] = perm.T  # Bob sends |j> to the label Alice's outcome moved it to
        bob_fix.append(pb)

    steps = [
        ProtocolStep("A", IncoherentInstrument((ua,), "A", "canon-A")),
        ProtocolStep("B", IncoherentInstrument((ub,), "B", "canon-B")),
        ProtocolStep("A", IncoherentInstrument(tuple(kraus_a), "A", "majorize")),
        ProtocolStep(
            "B",
            branches={(0, 0, a): IncoherentInstrument((p,), "B", f"perm-{a}") for a, p in enumerate(bob_fix)},
        ),
        ProtocolStep("A", IncoherentInstrument((va.conj().T,), "A", "uncanon-A")),
        ProtocolStep("B", IncoherentInstrument((vb.conj().T,), "B", "uncanon-B")),
    ]
    total = sum(k.conj().T @ k for k in kraus_a)
    comp_err = float(np.max(np.abs(total - np.eye(da))))
    incoherent = all(validate_incoherent(k)[0] for k in kraus_a + bob_fix + [ua, ub, va, vb])
    leaves = run_protocol(psi, steps)
    branches = [(tr.prefix[2], tr.probability, pure_fidelity(st.amps, phi.amps)) for tr, st in leaves]
    report = MajorizationReport(comp_err, incoherent, branches, len(kraus_a))
    if verify:
        if comp_err > 1e-8 or not incoherent:
            raise VerificationError(f"instrument invalid: completeness error {comp_err}, incoherent={incoherent}")
        if report.min_fidelity < 1 - 1e-8 or abs(report.total_probability - 1) > 1e-8:
            raise VerificationError(f"conversion failed: min fidelity {report.min_fidelity}")
    return steps, report


# --------------------------------------------------------------------------- dilution


@dataclass(frozen=True)
class DilutionReport:
    rate: float
    n: int | None = None
    delta: float | None = None
    typical_size: int | None = None
    size_upper_bound: float | None = None


def dilution_rate_check(psi, n: int | None = None, delta: float | None = None) -> DilutionReport:
    """Rate S(X) of the dephased single-system state, plus typical-set size data."""
    v = np.asarray(psi, dtype=complex).ravel()
    if abs(np.linalg.norm(v) - 1) > 1e-9:
        raise ValueError("psi must be normalized")
    p = np.abs(v) ** 2
    rate = shannon_entropy(p)
    if n is None or delta is None:
        return DilutionReport(rate)
    from .typeclasses import TypicalityParams, typical_set_stats

    stats = typical_set_stats(p, TypicalityParams(delta=delta, n=n))
    return DilutionReport(rate, n, delta, stats.typical_size, 2 ** (n * (rate + delta)))
