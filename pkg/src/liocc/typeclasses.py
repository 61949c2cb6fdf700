"""Method of types, typical sets, and desk-scale covering/coding Monte-Carlo.

Combinatorics (class sizes, typical-set probabilities) use exact integers and
fractions; only entropies of types are floating point.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .measures import dephased_entropies, entanglement_entropy
from .qcore import PureBipartiteState, rng_for, shannon_entropy

TYPE_ENUM_GUARD = 10**7
COVER_DIM_GUARD = 2**10
OUTPUT_SEQ_GUARD = 10**6


@dataclass(frozen=True)
class EmpiricalType:
    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if not counts or min(counts) < 0:
            raise ValueError("counts must be non-negative integers")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def alphabet_size(self) -> int:
        return len(self.counts)

    @property
    def freqs(self) -> np.ndarray:
        return np.array(self.counts, dtype=float) / self.n

    def sequence(self) -> np.ndarray:
        """Canonical member: symbols in sorted order."""
        return np.repeat(np.arange(self.alphabet_size), self.counts)


@dataclass(frozen=True)
class TypicalityParams:
    delta: float
    n: int

    def __post_init__(self):
        if self.delta <= 0 or self.n < 1:
            raise ValueError("need delta > 0 and n >= 1")


def type_of(sequence: Sequence[int], alphabet_size: int | None = None) -> EmpiricalType:
    seq = np.asarray(sequence, dtype=int)
    k = int(seq.max()) + 1 if alphabet_size is None else alphabet_size
    if seq.size and (seq.min() < 0 or seq.max() >= k):
        raise ValueError("symbol outside alphabet")
    return EmpiricalType(tuple(np.bincount(seq, minlength=k).tolist()))


def type_class_size(t: EmpiricalType) -> int:
    """Multinomial coefficient n! / prod(counts!), exact."""
    size, used = 1, 0
    for c in t.counts:
        used += c
        size *= math.comb(used, c)
    return size


def count_types(n: int, k: int) -> int:
    return math.comb(n + k - 1, k - 1)


def enumerate_types(n: int, k: int) -> Iterator[EmpiricalType]:
    """All compositions of n into k non-negative parts, lexicographically descending."""
    if count_types(n, k) > TYPE_ENUM_GUARD:
        raise ValueError(f"{count_types(n, k)} types exceed the enumeration guard")

    def rec(remaining, slots):
        if slots == 1:
            yield (remaining,)
            return
        for c in range(remaining, -1, -1):
            for rest in rec(remaining - c, slots - 1):
                yield (c,) + rest

    for counts in rec(n, k):
        yield EmpiricalType(counts)


def _exact(x) -> Fraction:
    # decimal string of the float, so 0.1 means 1/10
    return Fraction(str(x)) if not isinstance(x, Fraction) else x


def is_typical(t: EmpiricalType, p, delta) -> bool:
    """|N(a)/n - p(a)| < delta for every symbol, in exact rational arithmetic."""
    d = _exact(delta)
    return all(abs(Fraction(c, t.n) - _exact(pa)) < d for c, pa in zip(t.counts, p))


def tau(delta: float, alphabet_size: int) -> float:
    return -delta * alphabet_size * math.log2(delta)


def type_probability(t: EmpiricalType, p) -> Fraction:
    """Exact p^n(T_t) with p read as decimal fractions."""
    prob = Fraction(type_class_size(t))
    for c, pa in zip(t.counts, p):
        prob *= _exact(pa) ** c
    return prob


@dataclass
class TypicalSetStats:
    p: tuple
    params: TypicalityParams
    probability_exact: Fraction
    types: list
    sizes: list
    lower_bounds: list
    upper_bounds: list
    in_bracket: list
    bracket_valid: bool

    @property
    def probability(self) -> float:
        return float(self.probability_exact)

    @property
    def typical_size(self) -> int:
        return sum(self.sizes)

    @property
    def all_in_bracket(self) -> bool:
        return all(self.in_bracket)

    def rows(self) -> list[dict]:
        return [
            {
                "n": self.params.n,
                "delta": self.params.delta,
                "type": "-".join(map(str, t.counts)),
                "class_size": s,
                "lower_bound": lo,
                "upper_bound": hi,
                "in_bracket": ok,
            }
            for t, s, lo, hi, ok in zip(self.types, self.sizes, self.lower_bounds, self.upper_bounds, self.in_bracket)
        ]


def typical_set_stats(p, params: TypicalityParams) -> TypicalSetStats:
    """Exact typical-set probability and class-size bracket flags.

    The bracket (n+1)^-|X| 2^(n(H - tau)) <= |T_q| <= 2^(n(H + tau)) with
    tau = -delta |X| log delta is only claimed for delta < 1/(2|X|);
    ``bracket_valid`` records whether that holds, and flags are computed
    either way. Bounds are compared in log2 to avoid overflow.
    """
    p = tuple(float(x) for x in p)
    if min(p) < 0 or abs(sum(p) - 1) > 1e-9:
        raise ValueError("p must be a probability vector")
    n, k = params.n, len(p)
    h = shannon_entropy(p)
    tv = tau(params.delta, k) if params.delta < 1 else float("inf")
    prob = Fraction(0)
    types, sizes, lows, highs, flags = [], [], [], [], []
    for t in enumerate_types(n, k):
        if not is_typical(t, p, params.delta):
            continue
        size = type_class_size(t)
        prob += type_probability(t, p)
        log_lo = -k * math.log2(n + 1) + n * (h - tv)
        log_hi = n * (h + tv)
        log_size = math.log2(size)
        types.append(t)
        sizes.append(size)
        lows.append(2.0**log_lo if log_lo < 1000 else float("inf"))
        highs.append(2.0**log_hi if log_hi < 1000 else float("inf"))
        flags.append(log_lo - 1e-12 <= log_size <= log_hi + 1e-12)
    return TypicalSetStats(p, params, prob, types, sizes, lows, highs, flags, params.delta < 1 / (2 * k))


def stats_csv(stats: TypicalSetStats) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(stats.rows()[0]) if stats.rows() else ["n"], lineterminator="\n")
    w.writeheader()
    w.writerows(stats.rows())
    return buf.getvalue()


# --------------------------------------------------------------------------- rate gaps


def _conditional_states(state: PureBipartiteState):
    """Alice's distribution p(x) and Bob's conditional states psi_x on its support."""
    m = state.matrix
    px = np.sum(np.abs(m) ** 2, axis=1)
    keep = np.flatnonzero(px > 1e-15)
    psis = m[keep] / np.sqrt(px[keep])[:, None]
    return px[keep] / px[keep].sum(), psis


def _holevo_pure(q, psis) -> float:
    """I(X:B) for the pure-state ensemble {q(x), psi_x}: S(sum q psi psi^dag)."""
    rho = (psis.T * q) @ psis.conj()
    w = np.clip(np.linalg.eigvalsh(rho), 0, None)
    return shannon_entropy(w)


def _cc_mutual_info(q, channel) -> float:
    joint = q[:, None] * channel
    return shannon_entropy(q) + shannon_entropy(joint.sum(0)) - shannon_entropy(joint)


# asymptotic offset of each rate from its target, in units of delta
RATE_OFFSETS = {"S": 1, "M": -1, "L": 2, "C": -1, "Lbar": 2, "Cbar": -1}


def _log2_int(x: int) -> float:
    return math.log2(x) if x > 0 else float("-inf")


@dataclass
class RateGapReport:
    n: int
    delta: float
    targets: dict
    rows: list = field(default_factory=list)  # one dict per typical type
    num_types: int = 0

    def mean_gaps(self) -> dict:
        """q(t)-weighted mean |rate - target| per quantity (q conditioned on typicality)."""
        keys = [k for k in self.targets if k != "T"]
        out = {k: sum(r["q"] * r[f"gap_{k}"] for r in self.rows) for k in keys}
        out["T"] = abs(_log2_int(self.num_types) / self.n - self.targets["T"])
        return out

    def mean_deviations(self) -> dict:
        """q(t)-weighted mean |rate - (target + offset * delta)|.

        The code sizes carry explicit +-delta (2 delta) offsets, so raw gaps
        tend to those offsets at fixed delta; the deviation from
        target + offset is the finite-n part and should shrink with n.
        """
        keys = [k for k in self.targets if k != "T"]
        return {
            k: sum(r["q"] * abs(r[f"rate_{k}"] - self.targets[k] - RATE_OFFSETS[k] * self.delta) for r in self.rows)
            for k in keys
        }

    def to_rows(self) -> list[dict]:
        return [{"n": self.n, "delta": self.delta, **r} for r in self.rows]


def rate_gap_report(state: PureBipartiteState, n: int, delta: float) -> RateGapReport:
    """Finite-n code sizes for every typical type of Alice's dephased marginal.

    For type t with Bob's pure conditional states psi_x:
    S_t = ceil(2^(n(I(X_t:B) + delta))), M_t = floor(|T_t| / S_t),
    L_t = floor(2^(n(H(X_t) - I_cc + 2 delta))), C_t = ceil(2^(n(I_cc - delta))),
    and the barred L, C with the quantum I(X_t:B) in place of I_cc. Rates are
    (1/n) log2 of these; ``max(., 1)`` is used for the floors so that an empty
    partition at small n reports rate 0 instead of -inf.
    """
    px, psis = _conditional_states(state)
    channel = np.abs(psis) ** 2  # p(y|x)
    ent = dephased_entropies(state)
    e = entanglement_entropy(state)
    targets = {
        "S": e,
        "M": ent["S_X"] - e,
        "L": ent["S_X_given_Y"],
        "C": ent["I_XY"],
        "Lbar": ent["S_X"] - e,
        "Cbar": e,
        "T": 0.0,
    }
    stats = typical_set_stats(px, TypicalityParams(delta, n))
    report = RateGapReport(n, delta, targets, num_types=len(stats.types))
    total = stats.probability_exact
    for t, size in zip(stats.types, stats.sizes):
        q = t.freqs
        i_cq = _holevo_pure(q, psis)
        i_cc = _cc_mutual_info(q, channel)
        h = shannon_entropy(q)
        s_t = math.ceil(2.0 ** (n * (i_cq + delta)))
        sizes = {
            "S": s_t,
            "M": max(size // s_t, 1),
            "L": max(math.floor(2.0 ** (n * (h - i_cc + 2 * delta))), 1),
            "C": math.ceil(2.0 ** (n * (i_cc - delta))),
            "Lbar": max(math.floor(2.0 ** (n * (h - i_cq + 2 * delta))), 1),
            "Cbar": math.ceil(2.0 ** (n * (i_cq - delta))),
        }
        row = {"type": "-".join(map(str, t.counts)), "q": float(type_probability(t, px) / total) if total else 0.0}
        for key, val in sizes.items():
            rate = _log2_int(val) / n
            row[f"rate_{key}"] = rate
            row[f"gap_{key}"] = abs(rate - targets[key])
        report.rows.append(row)
    return report


# --------------------------------------------------------------------------- Monte-Carlo


def _run_trials(fn, trials: int, workers: int) -> list:
    if workers <= 1:
        return [fn(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials)))


def _class_members(t: EmpiricalType) -> np.ndarray:
    """All sequences of type t, lexicographic, shape (|T_t|, n)."""
    size = type_class_size(t)
    if size > 10**6:
        raise ValueError("type class too large to enumerate")
    out = []

    def rec(prefix, counts):
        if len(prefix) == t.n:
            out.append(prefix)
            return
        for a, c in enumerate(counts):
            if c:
                counts[a] -= 1
                rec(prefix + [a], counts)
                counts[a] += 1

    rec([], list(t.counts))
    return np.array(out, dtype=int).reshape(size, t.n)


def _product_vectors(seqs: np.ndarray, psis: np.ndarray) -> np.ndarray:
    """Rows: psi_{x_1} (x) ... (x) psi_{x_n} for each sequence."""
    vecs = psis[seqs[:, 0]]
    for i in range(1, seqs.shape[1]):
        vecs = np.einsum("sa,sb->sab", vecs, psis[seqs[:, i]]).reshape(seqs.shape[0], -1)
    return vecs


@dataclass
class CoveringStats:
    S: int
    trials: int
    distances: np.ndarray
    class_size: int

    @property
    def mean(self) -> float:
        return float(self.distances.mean())

    @property
    def std(self) -> float:
        return float(self.distances.std())


def covering_montecarlo(
    state: PureBipartiteState,
    t: EmpiricalType,
    S: int,
    trials: int = 200,
    seed: int = 0,
    workers: int = 1,
) -> CoveringStats:
    """Trace distance between the average of S sampled type-class states and sigma.

    The CQ channel sends x to Bob's conditional state psi_x. Each trial draws S
    distinct sequences uniformly from T_t and compares
    (1/S) sum_s psi_{x^n_s} with sigma = the uniform average over T_t.
    Trial i uses the stream ``rng_for(seed, "covering", S, i)``.
    """
    px, psis = _conditional_states(state)
    if t.alphabet_size != psis.shape[0]:
        raise ValueError(f"type alphabet {t.alphabet_size} != support of Alice's marginal {psis.shape[0]}")
    dim = psis.shape[1] ** t.n
    if dim > COVER_DIM_GUARD:
        raise ValueError(f"dim_b^n = {dim} exceeds guard {COVER_DIM_GUARD}")
    members = _class_members(t)
    size = members.shape[0]
    if not 1 <= S <= size:
        raise ValueError(f"S must be in [1, {size}]")
    vecs = _product_vectors(members, psis)
    sigma = vecs.T @ vecs.conj() / size

    def trial(i):
        rng = rng_for(seed, "covering", S, i)
        pick = rng.choice(size, size=S, replace=False)
        v = vecs[pick]
        avg = v.T @ v.conj() / S
        return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(avg - sigma))))

    return CoveringStats(S, trials, np.array(_run_trials(trial, trials, workers)), size)


@dataclass
class CodeStats:
    C: int
    trials: int
    successes: np.ndarray
    benchmark_bits: float  # n I(X:Y) for the type's input distribution

    @property
    def mean(self) -> float:
        return float(self.successes.mean())


def _random_type_member(t: EmpiricalType, rng, count: int) -> np.ndarray:
    base = t.sequence()
    return np.array([rng.permutation(base) for _ in range(count)], dtype=int).reshape(count, t.n)


def ml_success(codebook: np.ndarray, channel: np.ndarray) -> float:
    """(1/C) sum_c P(decode = c | c sent) under exact ML decoding.

    Equal to (1/C) sum_y max_c p(y|u_c); ties go to the lowest index, which
    does not change the value. Log-likelihoods are built by summing gathered
    per-position log p(y_i|x_i), so zero transition probabilities give -inf
    without 0 * inf products.
    """
    n = codebook.shape[1]
    ny = channel.shape[1]
    with np.errstate(divide="ignore"):
        logw = np.log(channel)
    ys = np.indices((ny,) * n).reshape(n, -1)  # all output sequences, columns
    ll = np.zeros((codebook.shape[0], ys.shape[1]))
    for i in range(n):
        ll += logw[codebook[:, i]][:, ys[i]]
    best = ll.max(axis=0)
    return float(np.exp(best).sum() / codebook.shape[0])


def channel_code_montecarlo(
    channel,
    t: EmpiricalType,
    C: int,
    trials: int = 100,
    seed: int = 0,
    workers: int = 1,
) -> CodeStats:
    """Random codebooks of C words drawn uniformly from T_t, ML decoded.

    Codewords are distinct when C <= |T_t|; larger codebooks are drawn
    i.i.d. with replacement, since T_t has too few members.
    Trial i uses ``rng_for(seed, "channel_code", C, i)``, so the result does
    not depend on ``workers``.
    """
    w = np.asarray(channel, dtype=float)
    if w.ndim != 2 or w.min() < 0 or np.max(np.abs(w.sum(axis=1) - 1)) > 1e-9:
        raise ValueError("channel must be a row-stochastic matrix p(y|x)")
    if w.shape[0] != t.alphabet_size:
        raise ValueError("channel input alphabet does not match the type")
    if w.shape[1] ** t.n > OUTPUT_SEQ_GUARD:
        raise ValueError(f"|Y|^n exceeds guard {OUTPUT_SEQ_GUARD}")
    if C < 1:
        raise ValueError("C must be positive")

    size = type_class_size(t)
    members = _class_members(t) if C <= size else None

    def trial(i):
        rng = rng_for(seed, "channel_code", C, i)
        if members is not None:
            book = members[rng.choice(size, size=C, replace=False)]
        else:
            book = _random_type_member(t, rng, C)
        return ml_success(book, w)

    bench = t.n * _cc_mutual_info(t.freqs, w)
    return CodeStats(C, trials, np.array(_run_trials(trial, trials, workers)), bench)


def bsc(flip: float) -> np.ndarray:
    return np.array([[1 - flip, flip], [flip, 1 - flip]])


def montecarlo_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()
