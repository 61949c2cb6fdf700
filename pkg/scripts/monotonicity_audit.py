"""Audit of C_L and related measures under random single-step incoherent instruments.

Reports, per measure, the largest increase of the ensemble average seen over
all samples, and the Hadamard step on |00> as a non-incoherent reference.
"""

from dataclasses import dataclass

from _common import parse_config, write_rows

from liocc.incoherent import ProtocolStep, monotone_audit, random_incoherent_instrument, unitary_instrument
from liocc.qcore import HADAMARD, basis_product, random_state, rng_for


@dataclass
class AuditConfig:
    samples: int = 1000
    max_dim: int = 4
    measures: tuple = ("C_L", "E", "C_r_AgivenB", "C_r_BgivenA")
    seed: int = 0


def run(cfg: AuditConfig) -> list[dict]:
    worst = dict.fromkeys(cfg.measures, 0.0)
    for i in range(cfg.samples):
        rng = rng_for(cfg.seed, "audit", i)
        da, db = (int(v) for v in rng.integers(2, cfg.max_dim + 1, size=2))
        state = random_state(rng, da, db)
        party = "AB"[i % 2]
        inst = random_incoherent_instrument(rng, da if party == "A" else db, outcomes=int(rng.integers(2, 5)), party=party)
        for m in cfg.measures:
            worst[m] = max(worst[m], monotone_audit(state, [ProtocolStep(party, inst)], m).max_increase)
    rows = [{"case": "random incoherent", "measure": m, "samples": cfg.samples, "max_increase": v} for m, v in worst.items()]
    had = monotone_audit(basis_product(0, 0), [ProtocolStep("A", unitary_instrument(HADAMARD, "A"))])
    rows.append({"case": "hadamard on |00>", "measure": "C_L", "samples": 1, "max_increase": had.max_increase})
    return rows


if __name__ == "__main__":
    cfg, out = parse_config(AuditConfig, __doc__.splitlines()[0])
    write_rows(cfg, run(cfg), out)
