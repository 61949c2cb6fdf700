"""Single-letter rate triples for LIOCC formation and distillation, and bound checkers.

All triples are asymptotic corner points computed from entropies of the
dephased state; nothing here runs a finite-n protocol.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass

import numpy as np

from .incoherent import IncoherentInstrument, LocalInstrument, apply_instrument
from .measures import dephased_entropies, entanglement_entropy, mutual_information_dephased
from .qcore import MINUS, PLUS, PureBipartiteState

SLACK = 1e-9


@dataclass(frozen=True)
class RateTriple:
    R_A: float
    R_B: float
    E_co: float
    kind: str
    label: str

    def __post_init__(self):
        if self.kind not in ("formation", "distillation"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if min(self.R_A, self.R_B, self.E_co) < -SLACK:
            raise ValueError(f"negative rate in {self}")

    def swapped(self, label: str) -> "RateTriple":
        return RateTriple(self.R_B, self.R_A, self.E_co, self.kind, label)


@dataclass(frozen=True)
class BoundReport:
    """Margins (lhs - rhs for >=, rhs - lhs for <=) of each bound.

    ``literal`` holds the bounds exactly as stated,
    ``mirrored`` their A<->B images, and ``derived`` extra bounds obtained by
    symmetry/resource arguments, reported for comparison only.
    """

    kind: str
    literal: dict
    mirrored: dict
    derived: dict
    slack: float = SLACK

    @property
    def passed(self) -> bool:
        return all(m >= -self.slack for m in self.literal.values())

    @property
    def passed_all(self) -> bool:
        return self.passed and all(m >= -self.slack for m in self.mirrored.values())

    def failures(self) -> list[str]:
        return [k for k, m in {**self.literal, **self.mirrored}.items() if m < -self.slack]

    def to_json(self) -> dict:
        return asdict(self) | {"passed": self.passed, "passed_all": self.passed_all}


def _entropies(state: PureBipartiteState) -> dict:
    ent = dephased_entropies(state)
    ent["E"] = entanglement_entropy(state)
    ent["C_L"] = ent["S_X"] + ent["S_Y"] - ent["E"]
    return ent


def _nonneg(x: float) -> float:
    # entropy differences can come out at -1e-16
    return 0.0 if -SLACK < x < 0 else x


def formation_corners(state: PureBipartiteState) -> list[RateTriple]:
    """The three formation corners and their A<->B swaps (labels F1..F3, F1s..F3s)."""
    e = _entropies(state)
    f1 = RateTriple(0.0, _nonneg(e["S_Y_given_X"]), e["S_X"], "formation", "F1")
    f2 = RateTriple(e["S_X"], _nonneg(e["S_Y_given_X"]), e["E"], "formation", "F2")
    f3 = RateTriple(0.0, 0.0, e["S_XY"], "formation", "F3")
    f1s = RateTriple(_nonneg(e["S_X_given_Y"]), 0.0, e["S_Y"], "formation", "F1s")
    f2s = RateTriple(_nonneg(e["S_X_given_Y"]), e["S_Y"], e["E"], "formation", "F2s")
    f3s = f3.swapped("F3s")
    return [f1, f2, f3, f1s, f2s, f3s]


def formation_bounds_check(state: PureBipartiteState, triple: RateTriple, slack: float = SLACK) -> BoundReport:
    """Lower bounds on formation rates.

    literal: (i) E_co >= E, (ii) R_A + R_B >= S(XY), (iii) R_B + E_co >= S(XY).
    mirrored: (iii') R_A + E_co >= S(XY).
    derived: R_A + R_B + E_co >= S(XY) (an eCoBit yields a CoBit),
    R_B + E_co >= S(Y) and R_A + E_co >= S(X).
    """
    e = _entropies(state)
    a, b, c = triple.R_A, triple.R_B, triple.E_co
    literal = {
        "i": c - e["E"],
        "ii": a + b - e["S_XY"],
        "iii": b + c - e["S_XY"],
    }
    mirrored = {"iii_mirror": a + c - e["S_XY"]}
    derived = {
        "sum_all": a + b + c - e["S_XY"],
        "bob_marginal": b + c - e["S_Y"],
        "alice_marginal": a + c - e["S_X"],
    }
    return BoundReport("formation", literal, mirrored, derived, slack)


def distillation_corners(state: PureBipartiteState) -> list[RateTriple]:
    """The two distillation corners and their swaps (labels D1, D4, D1s, D4s)."""
    e = _entropies(state)
    d1 = RateTriple(_nonneg(e["S_X"] - e["E"]), e["S_Y"], 0.0, "distillation", "D1")
    d4 = RateTriple(0.0, _nonneg(e["S_Y_given_X"]), _nonneg(e["I_XY"]), "distillation", "D4")
    d1s = RateTriple(e["S_X"], _nonneg(e["S_Y"] - e["E"]), 0.0, "distillation", "D1s")
    d4s = RateTriple(_nonneg(e["S_X_given_Y"]), 0.0, _nonneg(e["I_XY"]), "distillation", "D4s")
    return [d1, d4, d1s, d4s]


def distillation_bounds_check(state: PureBipartiteState, triple: RateTriple, slack: float = SLACK) -> BoundReport:
    """Upper bounds: (i) R_A + R_B <= C_L, (ii) R_B + E_co <= S(Y); mirror R_A + E_co <= S(X)."""
    e = _entropies(state)
    a, b, c = triple.R_A, triple.R_B, triple.E_co
    literal = {"i": e["C_L"] - (a + b), "ii": e["S_Y"] - (b + c)}
    mirrored = {"ii_mirror": e["S_X"] - (a + c)}
    return BoundReport("distillation", literal, mirrored, {}, slack)


def liocc_entanglement_rate(state: PureBipartiteState) -> float:
    """Maximal-entanglement distillation rate when the output Schmidt basis is unconstrained: E."""
    return entanglement_entropy(state)


def six_term_instrument() -> IncoherentInstrument:
    """Bob's 3 -> 2 instrument K0 = |0><+| + |1><2|, K1 = |0><-| (+/- on levels 0, 1)."""
    plus = np.r_[PLUS, 0]
    minus = np.r_[MINUS, 0]
    k0 = np.outer([1, 0], plus.conj()) + np.outer([0, 1], [0, 0, 1])
    k1 = np.outer([1, 0], minus.conj())
    return IncoherentInstrument((k0, k1), "B", "K0/K1")


def ecobit_rate_lower_bound(state: PureBipartiteState, instrument: LocalInstrument | None = None) -> float:
    """Single-copy lower bound on the eCoBit distillation rate.

    Without an instrument this is I(X:Y) of the dephased state; with one it is
    the outcome average sum_m p(m) I(X:Y) of the post-measurement states.
    """
    if instrument is None:
        return max(0.0, mutual_information_dephased(state))
    if not instrument.is_incoherent:
        raise ValueError("instrument is not incoherent")
    return max(0.0, sum(p * mutual_information_dephased(s) for _, p, s in apply_instrument(state, instrument)))


CSV_FIELDS = ("label", "kind", "R_A", "R_B", "E_co", "passed", "margins")


def corner_rows(state: PureBipartiteState, kind: str) -> list[dict]:
    if kind == "formation":
        corners, check = formation_corners(state), formation_bounds_check
    elif kind == "distillation":
        corners, check = distillation_corners(state), distillation_bounds_check
    else:
        raise ValueError(f"unknown kind {kind!r}")
    rows = []
    for t in corners:
        rep = check(state, t)
        margins = {**rep.literal, **rep.mirrored, **{f"derived:{k}": v for k, v in rep.derived.items()}}
        rows.append(
            {
                "label": t.label,
                "kind": t.kind,
                "R_A": t.R_A,
                "R_B": t.R_B,
                "E_co": t.E_co,
                "passed": rep.passed,
                "margins": ";".join(f"{k}={v:.12g}" for k, v in margins.items()),
            }
        )
    return rows


def corners_csv(state: PureBipartiteState, kind: str) -> str:
    """CSV rate-region table, one row per asymptotic corner point."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in corner_rows(state, kind):
        writer.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
