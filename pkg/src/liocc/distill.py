"""Distillability via incoherent rank-2 filters, and incoherent simulation of general Kraus sets.

A filter A = |0><a0| + |1><a1| is incoherent iff Delta(a0) and Delta(a1) are
orthogonal, i.e. a0 and a1 have disjoint supports in the incoherent basis.
Filtered states are 2 x 2, where NPT is equivalent to entanglement and to
distillability, so negativity decides the witness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .incoherent import validate_incoherent
from .protocols import cobits_for, unitary_via_cobits
from .qcore import DensityOperator, VerificationError, as_density, pure_fidelity, rng_for

WITNESS_TOL = 1e-7
KCOPY_GUARD = 4096


def partial_transpose(rho, dims=None) -> np.ndarray:
    rho = as_density(rho, dims)
    da, db = rho.require_split()
    t = rho.matrix.reshape(da, db, da, db).transpose(0, 3, 2, 1)
    return t.reshape(da * db, da * db)


def negativity(rho, dims=None) -> float:
    """Sum of |negative eigenvalues| of the partial transpose on B."""
    w = np.linalg.eigvalsh(partial_transpose(rho, dims))
    return max(0.0, float(-w[w < 0].sum()))


@dataclass(frozen=True, eq=False)
class IncoherentRank2Filter:
    party: str
    alpha0: np.ndarray
    alpha1: np.ndarray

    def __post_init__(self):
        a0 = np.asarray(self.alpha0, dtype=complex).ravel()
        a1 = np.asarray(self.alpha1, dtype=complex).ravel()
        if self.party not in ("A", "B"):
            raise ValueError("party must be 'A' or 'B'")
        if a0.shape != a1.shape:
            raise ValueError("alpha vectors must have equal length")
        for v in (a0, a1):
            if abs(np.linalg.norm(v) - 1) > 1e-9:
                raise ValueError("alpha vectors must be normalized")
        if abs(np.vdot(a0, a1)) > 1e-9:
            raise ValueError("alpha vectors must be orthogonal")
        if self.dephased_overlap(a0, a1) > 1e-9:
            raise ValueError("dephased alpha vectors are not orthogonal; the filter is not incoherent")
        object.__setattr__(self, "alpha0", a0)
        object.__setattr__(self, "alpha1", a1)

    @staticmethod
    def dephased_overlap(a0, a1) -> float:
        """tr[Delta(a0) Delta(a1)] = sum_i |a0_i|^2 |a1_i|^2."""
        return float(np.sum(np.abs(a0) ** 2 * np.abs(a1) ** 2))

    @property
    def dim(self) -> int:
        return self.alpha0.size

    @property
    def operator(self) -> np.ndarray:
        """A = |0><a0| + |1><a1|, shape (2, dim)."""
        return np.vstack([self.alpha0.conj(), self.alpha1.conj()])

    @property
    def projector(self) -> np.ndarray:
        return np.outer(self.alpha0, self.alpha0.conj()) + np.outer(self.alpha1, self.alpha1.conj())

    def to_json(self) -> dict:
        enc = lambda v: [[float(z.real), float(z.imag)] for z in v]  # noqa: E731
        return {"party": self.party, "alpha0": enc(self.alpha0), "alpha1": enc(self.alpha1)}

    @classmethod
    def from_json(cls, data: dict) -> "IncoherentRank2Filter":
        dec = lambda v: np.array([complex(a, b) for a, b in v])  # noqa: E731
        return cls(data["party"], dec(data["alpha0"]), dec(data["alpha1"]))


def identity_filter(party: str) -> IncoherentRank2Filter:
    return IncoherentRank2Filter(party, np.array([1, 0]), np.array([0, 1]))


def k_copy(rho, k: int) -> DensityOperator:
    """rho^(x)k reordered from (AB)^k to A^k B^k."""
    rho = as_density(rho)
    da, db = rho.require_split()
    dim = (da * db) ** k
    if dim > KCOPY_GUARD:
        raise ValueError(f"k-copy dimension {dim} exceeds guard {KCOPY_GUARD}")
    big = rho.matrix
    for _ in range(k - 1):
        big = np.kron(big, rho.matrix)
    # row indices (a1 b1 a2 b2 ...), then the same for columns
    t = big.reshape([da, db] * k * 2)
    rows = [2 * i for i in range(k)] + [2 * i + 1 for i in range(k)]
    perm = rows + [2 * k + r for r in rows]
    out = t.transpose(perm).reshape(dim, dim)
    return DensityOperator(out, dims=(da**k, db**k))


def filter_state(rho, fa: IncoherentRank2Filter, fb: IncoherentRank2Filter, k: int = 1):
    """(success probability, normalized 2x2 state) for (A (x) B) rho^(x)k (A (x) B)^dag."""
    rk = k_copy(rho, k)
    dka, dkb = rk.dims
    if fa.dim != dka or fb.dim != dkb:
        raise ValueError(f"filter dims ({fa.dim}, {fb.dim}) do not match k-copy dims ({dka}, {dkb})")
    op = np.kron(fa.operator, fb.operator)
    out = op @ rk.matrix @ op.conj().T
    p = float(np.trace(out).real)
    if p < 1e-14:
        raise ValueError("filter has zero success probability")
    return p, DensityOperator(out / p, dims=(2, 2))


@dataclass
class DistillWitness:
    k: int
    filter_a: IncoherentRank2Filter
    filter_b: IncoherentRank2Filter
    state: DensityOperator
    negativity: float
    probability: float

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "filters": {"A": self.filter_a.to_json(), "B": self.filter_b.to_json()},
            "negativity": self.negativity,
            "success_probability": self.probability,
        }

    @classmethod
    def from_json(cls, data: dict, rho) -> "DistillWitness":
        fa = IncoherentRank2Filter.from_json(data["filters"]["A"])
        fb = IncoherentRank2Filter.from_json(data["filters"]["B"])
        p, st = filter_state(rho, fa, fb, data["k"])
        return cls(data["k"], fa, fb, st, negativity(st), p)


def _kcopy_by_permutation(rho: DensityOperator, k: int) -> np.ndarray:
    """Same reordering as :func:`k_copy` but through an explicit permutation matrix."""
    da, db = rho.require_split()
    big = rho.matrix
    for _ in range(k - 1):
        big = np.kron(big, rho.matrix)
    dim = big.shape[0]
    q = np.zeros((dim, dim))
    for idx in range(dim):
        digits = []
        rem = idx
        for _ in range(k):
            rem, b = divmod(rem, db)
            rem, a = divmod(rem, da)
            digits.append((a, b))
        digits.reverse()
        a_idx = b_idx = 0
        for a, b in digits:
            a_idx = a_idx * da + a
            b_idx = b_idx * db + b
        q[a_idx * db**k + b_idx, idx] = 1
    return q @ big @ q.T


def verify_witness(rho, witness: DistillWitness, tol: float = WITNESS_TOL) -> bool:
    """Independent re-check through projector filtering and isometry compression.

    Applies P_A (x) P_B to the k-copy state (reordered by an explicit
    permutation matrix), compresses with eigenvector isometries of P_A and
    P_B (a local-unitary relabelling of the witness basis) and recomputes the
    negativity. Dephased orthogonality must be exactly zero.
    """
    rho = as_density(rho)
    fa, fb = witness.filter_a, witness.filter_b
    for f in (fa, fb):
        if IncoherentRank2Filter.dephased_overlap(f.alpha0, f.alpha1) != 0.0:
            return False
    big = _kcopy_by_permutation(rho, witness.k)
    proj = np.kron(fa.projector, fb.projector)
    sub = proj @ big @ proj
    isos = []
    for f in (fa, fb):
        w, v = np.linalg.eigh(f.projector)
        isos.append(v[:, w > 0.5])
    iso = np.kron(isos[0], isos[1])
    small = iso.conj().T @ sub @ iso
    p = float(np.trace(small).real)
    if p < 1e-14:
        return False
    neg = negativity(DensityOperator(small / p, dims=(2, 2)))
    return neg > tol and abs(neg - witness.negativity) < 1e-8


def random_filter(rng, party: str, dim: int) -> IncoherentRank2Filter:
    """Random superpositions on two disjoint, nonempty sets of basis labels."""
    labels = rng.permutation(dim)
    cut = int(rng.integers(1, dim)) if dim > 2 else 1
    end = int(rng.integers(cut + 1, dim + 1)) if dim > cut + 1 else dim
    vecs = []
    for support in (labels[:cut], labels[cut:end]):
        v = np.zeros(dim, dtype=complex)
        v[support] = rng.standard_normal(support.size) + 1j * rng.standard_normal(support.size)
        vecs.append(v / np.linalg.norm(v))
    return IncoherentRank2Filter(party, vecs[0], vecs[1])


def distillable_search(rho, k_max: int = 2, budget: int = 200, seed: int = 0) -> DistillWitness | None:
    """Randomized search for an incoherent rank-2 filter pair with an NPT output.

    Trials run in order k = 1..k_max, trial = 0..budget-1, each with
    ``rng_for(seed, "distill", k, trial)``; the first verified hit is returned.
    ``None`` is inconclusive, not a proof of undistillability.
    """
    rho = as_density(rho)
    da, db = rho.require_split()
    if (da * db) ** k_max > KCOPY_GUARD:
        raise ValueError(f"k_max={k_max} exceeds the k-copy guard for dims {da}x{db}")
    for k in range(1, k_max + 1):
        dka, dkb = da**k, db**k
        for trial in range(budget):
            rng = rng_for(seed, "distill", k, trial)
            fa, fb = random_filter(rng, "A", dka), random_filter(rng, "B", dkb)
            try:
                p, st = filter_state(rho, fa, fb, k)
            except ValueError:
                continue
            neg = negativity(st)
            if neg > WITNESS_TOL:
                wit = DistillWitness(k, fa, fb, st, neg, p)
                if not verify_witness(rho, wit):
                    raise VerificationError("witness failed independent re-verification")
                return wit
    return None


# --------------------------------------------------------------------------- general Kraus


@dataclass
class CobitLedger:
    entries: list = field(default_factory=list)

    def add(self, label: str, cobits: int) -> None:
        self.entries.append((label, int(cobits)))

    @property
    def total(self) -> int:
        return sum(c for _, c in self.entries)


@dataclass
class KrausSimulation:
    method: str  # "direct", "relabelled-projective", "stinespring"
    branches: list  # (outcome, probability, direct_probability, fidelity)
    outputs: list
    all_incoherent: bool
    cobits: int

    @property
    def min_fidelity(self) -> float:
        return min((b[3] for b in self.branches), default=1.0)

    @property
    def max_probability_error(self) -> float:
        return max((abs(b[1] - b[2]) for b in self.branches), default=0.0)


def _rank1_projective(kraus) -> list | None:
    """Vectors b_k if the set is {|b_k><b_k|} up to phases (orthonormal basis), else None."""
    d = kraus[0].shape[1]
    if len(kraus) != d or any(k.shape != (d, d) for k in kraus):
        return None
    vecs = []
    for k in kraus:
        u, s, vh = np.linalg.svd(k)
        if abs(s[0] - 1) > 1e-9 or (d > 1 and s[1] > 1e-9):
            return None
        b = vh[0].conj()
        if np.max(np.abs(k - np.outer(b, b.conj()) * (np.vdot(b, k @ b)))) > 1e-9:
            return None
        vecs.append(b)
    m = np.array(vecs).T
    if np.max(np.abs(m.conj().T @ m - np.eye(d))) > 1e-9:
        return None
    return vecs


def simulate_general_kraus_incoherently(kraus, state, ledger: CobitLedger | None = None) -> KrausSimulation:
    """Reproduce an arbitrary instrument with incoherent operations and CoBits.

    ``state`` has shape (d,) or (d, r); the r columns are a reference system
    that is never touched. Three routes, cheapest first:

    * every K is incoherent: apply directly, no CoBits;
    * a rank-1 projective measurement {|b_k><b_k|}: measure {|k><b_k|} instead.
      Probabilities and the reference's conditional state agree; the measured
      system is left in |k> rather than |b_k>;
    * otherwise: Stinespring isometry V = sum_k K_k (x) |k>_E, completed to a
      unitary, simulated with ceil(log2 D) CoBits, then E is measured
      incoherently.
    """
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    if not ks or any(k.shape != ks[0].shape for k in ks):
        raise ValueError("Kraus operators must share one shape")
    d_out, d = ks[0].shape
    err = np.max(np.abs(sum(k.conj().T @ k for k in ks) - np.eye(d)))
    if err > 1e-9:
        raise ValueError(f"Kraus set is not complete (deviation {err:.3g})")
    psi = np.asarray(state, dtype=complex).reshape(d, -1)
    if abs(np.linalg.norm(psi) - 1) > 1e-9:
        raise ValueError("state must be normalized")
    ledger = ledger if ledger is not None else CobitLedger()

    direct = [k @ psi for k in ks]
    direct_p = [float(np.sum(np.abs(v) ** 2)) for v in direct]

    def fid(a, b):
        return pure_fidelity(a.reshape(-1), b.reshape(-1)) if np.linalg.norm(b) > 0 else 1.0

    if all(validate_incoherent(k)[0] for k in ks):
        branches = [(i, p, p, 1.0) for i, p in enumerate(direct_p)]
        ledger.add("direct", 0)
        return KrausSimulation("direct", branches, direct, True, 0)

    vecs = _rank1_projective(ks)
    if vecs is not None:
        relabel = [np.outer(np.eye(d)[i], v.conj()) for i, v in enumerate(vecs)]
        branches, outputs = [], []
        for i, (r, v) in enumerate(zip(relabel, direct)):
            out = r @ psi
            p = float(np.sum(np.abs(out) ** 2))
            # reference state: the single nonzero row of each output
            ref_new = out[i]
            ref_old = vecs[i].conj() @ v
            branches.append((i, p, direct_p[i], fid(ref_new, ref_old)))
            outputs.append(out)
        ok = all(validate_incoherent(r)[0] for r in relabel)
        ledger.add("relabelled-projective", 0)
        return KrausSimulation("relabelled-projective", branches, outputs, ok, 0)

    m = len(ks)
    big = d_out * m
    v = np.zeros((big, d), dtype=complex)
    for i, k in enumerate(ks):
        v[i::m] = k  # row index s * m + i
    rng = rng_for(0, "stinespring", big)
    fill = rng.standard_normal((big, big - d)) + 1j * rng.standard_normal((big, big - d))
    q, r = np.linalg.qr(np.hstack([v, fill]))
    q = q * (np.diag(r) / np.abs(np.diag(r)))  # makes the first d columns equal V
    if np.max(np.abs(q[:, :d] - v)) > 1e-9:
        raise VerificationError("Stinespring completion failed")
    padded = np.zeros((big, psi.shape[1]), dtype=complex)
    padded[:d] = psi
    if big < d:
        raise ValueError("output space smaller than input")
    sim = unitary_via_cobits(q, padded)
    cobits = cobits_for(big)
    ledger.add(f"unitary d={big}", cobits)
    if sim.min_fidelity < 1 - 1e-9 or not sim.all_incoherent:
        raise VerificationError("unitary simulation failed")
    measure = [np.kron(np.eye(d_out), np.eye(m)[i][None, :]) for i in range(m)]
    ok = all(validate_incoherent(f)[0] for f in measure)
    branches, outputs = [], []
    # every teleportation outcome carries the same corrected state; check them all
    for i, f in enumerate(measure):
        worst, p_first = 1.0, None
        for key, out in sim.outputs.items():
            o = f @ out.reshape(big, -1)
            p = float(np.sum(np.abs(o) ** 2))
            p_first = p if p_first is None else p_first
            if direct_p[i] > 1e-14:
                worst = min(worst, fid(o, direct[i]))
        branches.append((i, p_first, direct_p[i], worst))
        outputs.append(f @ sim.outputs[(0, 0)].reshape(big, -1))
    return KrausSimulation("stinespring", branches, outputs, ok, cobits)
