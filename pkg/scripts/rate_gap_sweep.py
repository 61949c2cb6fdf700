"""Finite-n rate gaps of the type-class codes, averaged over typical types.

Prints one CSV row per (state seed, n): the q-weighted mean gap of each rate
from its asymptotic target, and their sum.
"""

from dataclasses import dataclass

from _common import parse_config, write_rows

from liocc.qcore import random_state
from liocc.typeclasses import rate_gap_report


@dataclass
class RateGapConfig:
    seeds: tuple = (1, 2, 3)
    dim_b: int = 2
    delta: float = 0.1
    ns: tuple = (8, 16, 32, 64)


def run(cfg: RateGapConfig) -> list[dict]:
    rows = []
    for seed in cfg.seeds:
        state = random_state(seed, 2 + seed % 2, cfg.dim_b)
        for n in cfg.ns:
            rep = rate_gap_report(state, n, cfg.delta)
            gaps = rep.mean_gaps()
            rows.append({"seed": seed, "n": n, "types": rep.num_types, **{f"gap_{k}": v for k, v in gaps.items()}, "total": sum(gaps.values())})
    return rows


if __name__ == "__main__":
    cfg, out = parse_config(RateGapConfig, __doc__.splitlines()[0])
    write_rows(cfg, run(cfg), out)
