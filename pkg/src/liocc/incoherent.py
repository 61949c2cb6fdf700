"""Incoherent Kraus operators, local instruments and a two-party protocol engine.

A Kraus operator is incoherent iff every column has at most one nonzero
entry, i.e. K|x> is proportional to a single basis vector. Checking this per
column is equivalent to checking that K maps every diagonal state to a
diagonal state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .measures import named_measure
from .qcore import DensityOperator, PureBipartiteState, rng_for

ZERO_TOL = 1e-12
COMPLETENESS_TOL = 1e-9
PRUNE_TOL = 1e-12
PARTIES = ("A", "B")


class ProtocolError(ValueError):
    pass


def validate_incoherent(op, tol: float = ZERO_TOL) -> tuple[bool, str | None]:
    """Column rule check. Returns ``(ok, diagnostic)``; diagnostic names the first bad column."""
    m = np.asarray(op, dtype=complex)
    if m.ndim != 2:
        return False, "operator is not a matrix"
    nonzero = np.abs(m) > tol
    counts = nonzero.sum(axis=0)
    bad = np.flatnonzero(counts > 1)
    if bad.size:
        col = int(bad[0])
        rows = np.flatnonzero(nonzero[:, col]).tolist()
        return False, f"column {col} has nonzero entries in rows {rows}"
    return True, None


@dataclass(frozen=True, eq=False)
class LocalInstrument:
    """A complete set of Kraus operators applied by one party.

    Completeness sum K^dag K = I is enforced; incoherence is not. Use
    :class:`IncoherentInstrument` for the free operations.
    """

    kraus: tuple
    party: str = "A"
    label: str = ""

    def __post_init__(self):
        if self.party not in PARTIES:
            raise ValueError(f"party must be 'A' or 'B', got {self.party!r}")
        ops = tuple(np.array(k, dtype=complex) for k in self.kraus)
        if not ops:
            raise ValueError("instrument needs at least one Kraus operator")
        shape = ops[0].shape
        if any(k.ndim != 2 or k.shape != shape for k in ops):
            raise ValueError("all Kraus operators must be matrices of equal shape")
        total = sum(k.conj().T @ k for k in ops)
        err = np.max(np.abs(total - np.eye(shape[1])))
        if err > COMPLETENESS_TOL:
            raise ValueError(f"Kraus set is not complete (max deviation {err:.3g})")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ops)

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def is_incoherent(self) -> bool:
        return all(validate_incoherent(k)[0] for k in self.kraus)


class IncoherentInstrument(LocalInstrument):
    def __post_init__(self):
        super().__post_init__()
        for i, k in enumerate(self.kraus):
            ok, why = validate_incoherent(k)
            if not ok:
                raise ValueError(f"Kraus operator {i} is not incoherent: {why}")


def unitary_instrument(u, party: str = "A", label: str = "") -> LocalInstrument:
    """Single-outcome instrument; incoherent when u is a phased permutation."""
    u = np.asarray(u, dtype=complex)
    cls = IncoherentInstrument if validate_incoherent(u)[0] else LocalInstrument
    return cls((u,), party, label)


def identity_instrument(dim: int, party: str = "A") -> IncoherentInstrument:
    return IncoherentInstrument((np.eye(dim),), party, "identity")


# --------------------------------------------------------------------------- application


def _apply_kraus(state, k: np.ndarray, party: str):
    """Unnormalised K (x) I or I (x) K applied to a pure state or density operator."""
    if isinstance(state, PureBipartiteState):
        m = state.matrix
        if party == "A":
            if k.shape[1] != state.dim_a:
                raise ValueError(f"Kraus input dim {k.shape[1]} != dim_a {state.dim_a}")
            out = k @ m
        else:
            if k.shape[1] != state.dim_b:
                raise ValueError(f"Kraus input dim {k.shape[1]} != dim_b {state.dim_b}")
            out = m @ k.T
        return out
    da, db = state.require_split()
    if party == "A":
        if k.shape[1] != da:
            raise ValueError(f"Kraus input dim {k.shape[1]} != dim_a {da}")
        big = np.kron(k, np.eye(db))
        dims = (k.shape[0], db)
    else:
        if k.shape[1] != db:
            raise ValueError(f"Kraus input dim {k.shape[1]} != dim_b {db}")
        big = np.kron(np.eye(da), k)
        dims = (da, k.shape[0])
    return big @ state.matrix @ big.conj().T, dims


def apply_instrument(state, instrument: LocalInstrument, prune: float = PRUNE_TOL):
    """Branch list ``[(outcome, probability, post_state), ...]``.

    Works on :class:`PureBipartiteState` and bipartite :class:`DensityOperator`.
    Branches with probability below ``prune`` are dropped.
    """
    branches = []
    for idx, k in enumerate(instrument.kraus):
        if isinstance(state, PureBipartiteState):
            out = _apply_kraus(state, k, instrument.party)
            p = float(np.sum(np.abs(out) ** 2))
            if p < prune:
                continue
            post = PureBipartiteState.from_matrix(out / np.sqrt(p))
        else:
            out, dims = _apply_kraus(state, k, instrument.party)
            p = float(np.trace(out).real)
            if p < prune:
                continue
            post = DensityOperator(out / p, dims=dims)
        branches.append((idx, p, post))
    return branches


# --------------------------------------------------------------------------- protocols


@dataclass(frozen=True, eq=False)
class ProtocolStep:
    """One round: ``party`` applies an instrument chosen from the transcript so far.

    ``branches`` maps a transcript prefix (tuple of earlier outcomes, one per
    earlier step) to an instrument; ``default`` is used for prefixes not listed.
    """

    party: str
    default: LocalInstrument | None = None
    branches: Mapping[tuple, LocalInstrument] = field(default_factory=dict)

    def instrument_for(self, prefix: tuple) -> LocalInstrument:
        inst = self.branches.get(tuple(prefix), self.default)
        if inst is None:
            raise ProtocolError(f"no instrument for transcript prefix {prefix}")
        return inst

    def instruments(self):
        if self.default is not None:
            yield self.default
        yield from self.branches.values()


@dataclass(frozen=True)
class Transcript:
    outcomes: tuple  # ((step, outcome), ...)
    probability: float

    @property
    def prefix(self) -> tuple:
        return tuple(o for _, o in self.outcomes)


def validate_protocol(protocol: Sequence[ProtocolStep], incoherent_only: bool = True) -> None:
    for i, step in enumerate(protocol):
        if step.party not in PARTIES:
            raise ProtocolError(f"step {i}: bad party {step.party!r}")
        for prefix in step.branches:
            if len(prefix) != i:
                raise ProtocolError(
                    f"step {i}: prefix {prefix} must list exactly the {i} earlier outcomes"
                )
        for inst in step.instruments():
            if inst.party != step.party:
                raise ProtocolError(f"step {i}: instrument party {inst.party} != step party {step.party}")
            if incoherent_only and not inst.is_incoherent:
                raise ProtocolError(f"step {i}: instrument {inst.label!r} is not incoherent")


def run_protocol_levels(state, protocol: Sequence[ProtocolStep], incoherent_only: bool = True):
    """Frontiers after each step: list of ``[(Transcript, state), ...]`` (index 0 = input)."""
    validate_protocol(protocol, incoherent_only)
    frontier = [(Transcript((), 1.0), state)]
    levels = [frontier]
    for i, step in enumerate(protocol):
        nxt = []
        for tr, st in frontier:
            inst = step.instrument_for(tr.prefix)
            for outcome, p, post in apply_instrument(st, inst):
                q = tr.probability * p
                if q < PRUNE_TOL:
                    continue
                nxt.append((Transcript(tr.outcomes + ((i, outcome),), q), post))
        # depth-first canonical order = lexicographic on the outcome prefix
        nxt.sort(key=lambda item: item[0].prefix)
        frontier = nxt
        levels.append(frontier)
    return levels


def run_protocol(state, protocol: Sequence[ProtocolStep], incoherent_only: bool = True):
    """Leaves ``[(Transcript, post_state), ...]`` in canonical depth-first order."""
    leaves = run_protocol_levels(state, protocol, incoherent_only)[-1]
    total = sum(t.probability for t, _ in leaves)
    if abs(total - 1) > 1e-8:
        raise ProtocolError(f"leaf probabilities sum to {total}")
    return leaves


@dataclass(frozen=True)
class AuditReport:
    measure: str
    initial: float
    averages: tuple  # ensemble average after each step
    max_increase: float
    all_incoherent: bool

    @property
    def monotone(self) -> bool:
        return self.max_increase <= 1e-9


def monotone_audit(state: PureBipartiteState, protocol: Sequence[ProtocolStep], measure: str = "C_L") -> AuditReport:
    """Track the ensemble average of ``measure`` through ``protocol``.

    Non-incoherent steps are allowed here (audit-only) and flagged in the report.
    """
    levels = run_protocol_levels(state, protocol, incoherent_only=False)
    values = [sum(t.probability * named_measure(s, measure) for t, s in lvl) for lvl in levels]
    increase = max((b - a for a, b in zip(values, values[1:])), default=0.0)
    flags = all(inst.is_incoherent for step in protocol for inst in step.instruments())
    return AuditReport(measure, values[0], tuple(values[1:]), max(0.0, increase), flags)


# --------------------------------------------------------------------------- sampling


def random_incoherent_instrument(
    seed,
    dim_in: int,
    dim_out: int | None = None,
    outcomes: int | None = None,
    party: str = "A",
    sparsity: float = 0.3,
) -> IncoherentInstrument:
    """Random complete set of incoherent Kraus operators.

    Stack the Kraus operators into an isometry V (outcome-major rows). For each
    outcome a and input column j draw a target row f_a(j), or leave the entry
    empty with probability ``sparsity``. Column j of V is then a vector v_j over
    outcomes, and orthonormality only constrains pairs of columns that share a
    target row for some outcome. Columns are filled in order by projecting a
    complex Gaussian vector onto the solutions of those linear constraints.
    """
    rng = rng_for(seed)
    dim_out = dim_in if dim_out is None else dim_out
    m = max(dim_in, 2) if outcomes is None else outcomes
    if m * dim_out < dim_in:
        raise ValueError(f"{m} outcomes into dim {dim_out} cannot form an isometry from dim {dim_in}")
    for _ in range(100):
        targets = rng.integers(dim_out, size=(m, dim_in))
        active = rng.random((m, dim_in)) >= sparsity
        cols = []
        ok = True
        for j in range(dim_in):
            support = np.flatnonzero(active[:, j])
            rows = []
            for i, vi in enumerate(cols):
                shared = (targets[:, i] == targets[:, j]) & active[:, i] & active[:, j]
                if shared.any():
                    rows.append(np.where(shared, vi, 0)[support].conj())
            z = rng.standard_normal(support.size) + 1j * rng.standard_normal(support.size)
            if rows:
                a = np.array(rows)
                _, s, vh = np.linalg.svd(a)
                rank = int(np.sum(s > 1e-10))
                null = vh[rank:].conj().T
                z = null @ (null.conj().T @ z) if null.size else np.zeros_like(z)
            if support.size == 0 or np.linalg.norm(z) < 1e-6:
                ok = False
                break
            v = np.zeros(m, dtype=complex)
            v[support] = z / np.linalg.norm(z)
            cols.append(v)
        if not ok:
            continue
        kraus = []
        for a in range(m):
            k = np.zeros((dim_out, dim_in), dtype=complex)
            for j in range(dim_in):
                if active[a, j]:
                    k[targets[a, j], j] = cols[j][a]
            kraus.append(k)
        return IncoherentInstrument(tuple(kraus), party, "random")
    raise RuntimeError("could not sample an incoherent instrument")


# --------------------------------------------------------------------------- JSON


def _matrix_to_json(m) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def _prefix_key(prefix: tuple) -> str:
    return ",".join(str(o) for o in prefix)


def protocol_to_json(protocol: Sequence[ProtocolStep]) -> list:
    """Steps as ``{party, branches: {prefix: [kraus...]}}``; '*' keys the default."""
    out = []
    for step in protocol:
        branches = {}
        if step.default is not None:
            branches["*"] = [_matrix_to_json(k) for k in step.default.kraus]
        for prefix, inst in step.branches.items():
            branches[_prefix_key(prefix)] = [_matrix_to_json(k) for k in inst.kraus]
        out.append({"party": step.party, "branches": branches})
    return out


def protocol_from_json(data: list, incoherent_only: bool = True) -> list[ProtocolStep]:
    cls = IncoherentInstrument if incoherent_only else LocalInstrument
    steps = []
    try:
        for item in data:
            party = item["party"]
            default, branches = None, {}
            for key, mats in item["branches"].items():
                inst = cls(tuple(_matrix_from_json(m) for m in mats), party)
                if key == "*":
                    default = inst
                else:
                    prefix = tuple(int(o) for o in key.split(",")) if key else ()
                    branches[prefix] = inst
            steps.append(ProtocolStep(party, default, branches))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed protocol JSON: {exc}") from exc
    validate_protocol(steps, incoherent_only)
    return steps
