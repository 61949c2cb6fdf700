"""Dense state containers and the basic linear algebra everything else builds on.

The incoherent basis is always the computational basis. Bipartite vectors are
stored Alice-major: amplitude of |x>|y> sits at index ``x * dim_b + y``.
All entropies are in bits.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

NORM_TOL = 1e-9
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-9

# Dense operators larger than this are refused; raise it explicitly if needed.
MAX_DIM = 2**14


class VerificationError(RuntimeError):
    """A numerical self-check failed (protocol output, identity, witness)."""


def _check_dim(dim: int) -> None:
    if dim > MAX_DIM:
        raise ValueError(f"dimension {dim} exceeds dense cap {MAX_DIM}")


@dataclass(frozen=True, eq=False)
class PureBipartiteState:
    dim_a: int
    dim_b: int
    amps: np.ndarray

    def __post_init__(self):
        if self.dim_a < 1 or self.dim_b < 1:
            raise ValueError("local dimensions must be >= 1")
        amps = np.asarray(self.amps, dtype=complex).reshape(-1).copy()
        if amps.size != self.dim_a * self.dim_b:
            raise ValueError(
                f"amplitude vector has length {amps.size}, expected {self.dim_a * self.dim_b}"
            )
        _check_dim(amps.size)
        norm = np.vdot(amps, amps).real
        if abs(norm - 1) > NORM_TOL:
            raise ValueError(f"state is not normalized (|psi|^2 = {norm:.12g})")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_matrix(cls, matrix, normalize: bool = False) -> "PureBipartiteState":
        """Build from the ``dim_a x dim_b`` coefficient matrix ``M[x, y]``."""
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2:
            raise ValueError("coefficient matrix must be 2-D")
        if normalize:
            m = m / np.linalg.norm(m)
        return cls(m.shape[0], m.shape[1], m.reshape(-1))

    @classmethod
    def product(cls, a, b) -> "PureBipartiteState":
        a = np.asarray(a, dtype=complex)
        b = np.asarray(b, dtype=complex)
        return cls(a.size, b.size, np.kron(a / np.linalg.norm(a), b / np.linalg.norm(b)))

    @property
    def matrix(self) -> np.ndarray:
        return self.amps.reshape(self.dim_a, self.dim_b)

    @property
    def dims(self) -> tuple[int, int]:
        return (self.dim_a, self.dim_b)

    def density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amps, self.amps.conj()), dims=self.dims)

    def overlap(self, other: "PureBipartiteState") -> float:
        """|<self|other>|, the phase-insensitive comparison used throughout."""
        if self.dims != other.dims:
            raise ValueError("dimension mismatch")
        return float(abs(np.vdot(self.amps, other.amps)))

    def to_json(self) -> dict:
        return {
            "dim_a": self.dim_a,
            "dim_b": self.dim_b,
            "amps": [[float(z.real), float(z.imag)] for z in self.amps],
        }

    @classmethod
    def from_json(cls, data: dict) -> "PureBipartiteState":
        try:
            amps = [complex(re, im) for re, im in data["amps"]]
            return cls(int(data["dim_a"]), int(data["dim_b"]), np.array(amps))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed state JSON: {exc}") from exc


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, PSD, unit-trace matrix with an optional bipartite split."""

    matrix: np.ndarray
    dims: tuple[int, int] | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        _check_dim(m.shape[0])
        if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-8:
            raise ValueError("matrix is not Hermitian")
        m = (m + m.conj().T) / 2
        tr = np.trace(m).real
        if abs(tr - 1) > NORM_TOL:
            raise ValueError(f"trace is {tr:.12g}, expected 1")
        lo = np.linalg.eigvalsh(m)[0]
        if lo < -PSD_TOL:
            raise ValueError(f"matrix is not PSD (min eigenvalue {lo:.3g})")
        if self.dims is not None:
            da, db = (int(d) for d in self.dims)
            if da * db != m.shape[0]:
                raise ValueError(f"split {da}x{db} does not match dimension {m.shape[0]}")
            object.__setattr__(self, "dims", (da, db))
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def require_split(self) -> tuple[int, int]:
        if self.dims is None:
            raise ValueError("operation needs a bipartite split (dims=(dim_a, dim_b))")
        return self.dims

    def to_json(self) -> dict:
        out = {
            "dim": self.dim,
            "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix],
        }
        if self.dims is not None:
            out["dims"] = list(self.dims)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "DensityOperator":
        try:
            m = np.array([[complex(re, im) for re, im in row] for row in data["matrix"]])
            if m.shape != (int(data["dim"]), int(data["dim"])):
                raise ValueError("matrix shape does not match 'dim'")
            dims = tuple(data["dims"]) if "dims" in data else None
            return cls(m, dims=dims)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed density JSON: {exc}") from exc


def as_density(rho, dims=None) -> DensityOperator:
    """Accept a DensityOperator, a pure state, a raw matrix or a ket."""
    if isinstance(rho, DensityOperator):
        return rho
    if isinstance(rho, PureBipartiteState):
        return rho.density()
    m = np.asarray(rho, dtype=complex)
    if m.ndim == 1:
        m = np.outer(m, m.conj())
    return DensityOperator(m, dims=dims)


def _matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityOperator):
        return rho.matrix
    if isinstance(rho, PureBipartiteState):
        return rho.density().matrix
    m = np.asarray(rho, dtype=complex)
    if m.ndim == 1:
        m = np.outer(m, m.conj())
    return m


# --------------------------------------------------------------------------- named states

def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1
    return v


PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)
MINUS = np.array([1, -1], dtype=complex) / math.sqrt(2)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
PAULI_Z = np.diag([1, -1]).astype(complex)


def max_coherent(dim: int) -> np.ndarray:
    return np.ones(dim, dtype=complex) / math.sqrt(dim)


def ecobit() -> PureBipartiteState:
    """(|00> + |11>)/sqrt(2)."""
    return PureBipartiteState.from_matrix(np.eye(2) / math.sqrt(2))


def basis_product(x: int, y: int, dim_a: int = 2, dim_b: int = 2) -> PureBipartiteState:
    return PureBipartiteState.product(ket(x, dim_a), ket(y, dim_b))


def lambda_state(lam: float) -> PureBipartiteState:
    """sqrt(lam)|+>|0> + sqrt(1-lam)|->|1>."""
    m = math.sqrt(lam) * np.outer(PLUS, ket(0, 2)) + math.sqrt(1 - lam) * np.outer(MINUS, ket(1, 2))
    return PureBipartiteState.from_matrix(m)


def six_term_state() -> PureBipartiteState:
    """(|0>(|0>+|1>+|2>) + |1>(|0>-|1>+|2>)) / sqrt(6), a 2x3 state with I(X:Y)=0."""
    m = np.array([[1, 1, 1], [1, -1, 1]], dtype=complex) / math.sqrt(6)
    return PureBipartiteState.from_matrix(m)


def maximally_correlated(coeffs) -> PureBipartiteState:
    """sum_i sqrt(c_i)|ii> for a probability vector c."""
    c = np.asarray(coeffs, dtype=float)
    return PureBipartiteState.from_matrix(np.diag(np.sqrt(c)))


def isotropic_state(p: float, dim: int = 2) -> DensityOperator:
    """p |Phi_d><Phi_d| + (1-p) I/d^2."""
    phi = np.eye(dim).reshape(-1) / math.sqrt(dim)
    m = p * np.outer(phi, phi) + (1 - p) * np.eye(dim * dim) / dim**2
    return DensityOperator(m, dims=(dim, dim))


# --------------------------------------------------------------------------- seeding

def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part)


def rng_for(seed, *path) -> np.random.Generator:
    """Child generator for ``seed`` split along ``path``.

    Path elements are ints or strings (strings are hashed with CRC-32), so
    (root seed, command, trial index) always maps to the same stream.
    A Generator passed as ``seed`` is returned unchanged when ``path`` is empty.
    """
    if isinstance(seed, np.random.Generator):
        if not path:
            return seed
        seed = int(seed.integers(2**63))
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key(p) for p in path))
    return np.random.default_rng(ss)


def random_unitary(seed, dim: int) -> np.ndarray:
    """Haar unitary from the QR decomposition of a complex Ginibre matrix."""
    rng = rng_for(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_ket(seed, dim: int) -> np.ndarray:
    rng = rng_for(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_state(seed, dim_a: int, dim_b: int) -> PureBipartiteState:
    return PureBipartiteState(dim_a, dim_b, random_ket(seed, dim_a * dim_b))


def random_density(seed, dim: int, rank: int | None = None, dims=None) -> DensityOperator:
    """Ginibre-ensemble density matrix G G^dag / tr, Hilbert-Schmidt measure for full rank."""
    rng = rng_for(seed)
    k = dim if rank is None else rank
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    m = g @ g.conj().T
    return DensityOperator(m / np.trace(m).real, dims=dims)


# --------------------------------------------------------------------------- operations

@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    coefficients: np.ndarray  # squared Schmidt coefficients, non-increasing
    left_vectors: np.ndarray  # dim_a x r, orthonormal columns
    right_vectors: np.ndarray  # dim_b x r

    def rank(self, tol: float = 1e-12) -> int:
        return int(np.sum(self.coefficients > tol))

    def reconstruct(self) -> np.ndarray:
        s = np.sqrt(self.coefficients)
        return ((self.left_vectors * s) @ self.right_vectors.T).reshape(-1)


def schmidt_decompose(state: PureBipartiteState) -> SchmidtDecomposition:
    u, s, vh = np.linalg.svd(state.matrix, full_matrices=False)
    coeffs = s**2
    coeffs = coeffs / coeffs.sum()
    return SchmidtDecomposition(coeffs, u, vh.T)


def partial_trace(rho, keep: str) -> DensityOperator:
    """Reduced state on party ``keep`` ('A' or 'B')."""
    if isinstance(rho, PureBipartiteState):
        m = rho.matrix
        red = m @ m.conj().T if keep == "A" else m.T @ m.conj()
        return DensityOperator(red)
    rho = as_density(rho)
    da, db = rho.require_split()
    t = rho.matrix.reshape(da, db, da, db)
    if keep == "A":
        red = np.einsum("ibjb->ij", t)
    elif keep == "B":
        red = np.einsum("aiaj->ij", t)
    else:
        raise ValueError("keep must be 'A' or 'B'")
    return DensityOperator(red)


def dephase(rho, scope: str = "full") -> DensityOperator:
    """Completely dephasing channel; ``scope`` 'A' or 'B' dephases that party only."""
    rho = as_density(rho)
    if scope == "full":
        return DensityOperator(np.diag(np.diag(rho.matrix)), dims=rho.dims)
    da, db = rho.require_split()
    t = rho.matrix.reshape(da, db, da, db).copy()
    if scope == "A":
        mask = np.eye(da)[:, None, :, None]
    elif scope == "B":
        mask = np.eye(db)[None, :, None, :]
    else:
        raise ValueError("scope must be 'full', 'A' or 'B'")
    return DensityOperator((t * mask).reshape(da * db, da * db), dims=rho.dims)


def dephased_distribution(state: PureBipartiteState) -> np.ndarray:
    """Joint distribution p[x, y] = |<xy|psi>|^2 of the dephased state."""
    return np.abs(state.matrix) ** 2


def _clipped_eigenvalues(m: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(m)
    if w[0] < -PSD_TOL:
        raise ValueError(f"negative eigenvalue {w[0]:.3g} below tolerance")
    return np.clip(w, 0.0, 1.0)


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float).reshape(-1)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p))) if p.size else 0.0


def binary_entropy(x: float) -> float:
    return shannon_entropy([x, 1 - x])


def von_neumann_entropy(rho) -> float:
    return max(0.0, shannon_entropy(_clipped_eigenvalues(_matrix(rho))))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def trace_norm(m) -> float:
    m = np.asarray(m, dtype=complex)
    return float(np.sum(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2))))


def trace_distance(rho, sigma) -> float:
    a, b = _matrix(rho), _matrix(sigma)
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    return min(1.0, 0.5 * trace_norm(a - b))


def fidelity(rho, sigma) -> float:
    """tr sqrt(sqrt(rho) sigma sqrt(rho)), via the nuclear norm of sqrt(rho) sqrt(sigma)."""
    a, b = _matrix(rho), _matrix(sigma)
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    sv = np.linalg.svd(_psd_sqrt(a) @ _psd_sqrt(b), compute_uv=False)
    return float(min(1.0, sv.sum()))


def pure_fidelity(psi, phi) -> float:
    """|<psi|phi>|^2 for vectors (or pure states), after normalising both."""
    a = psi.amps if isinstance(psi, PureBipartiteState) else np.asarray(psi, dtype=complex).reshape(-1)
    b = phi.amps if isinstance(phi, PureBipartiteState) else np.asarray(phi, dtype=complex).reshape(-1)
    return float(abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real))


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex) if np.ndim(mats[0]) == 2 else np.ones(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out
