"""Covering Monte-Carlo: mean trace distance against codebook size S.

Each channel instance is the conditional-state map of a seeded random 2x2
pure state, sampled on one type class.
"""

from dataclasses import dataclass

from _common import parse_config, write_rows

from liocc.qcore import random_state, rng_for
from liocc.typeclasses import EmpiricalType, covering_montecarlo


@dataclass
class CoveringConfig:
    channels: tuple = (1, 2)
    counts: tuple = (3, 3)
    sizes: tuple = (1, 2, 4, 8, 16, 20)
    trials: int = 200
    seed: int = 9
    jobs: int = 1


def run(cfg: CoveringConfig) -> list[dict]:
    t = EmpiricalType(cfg.counts)
    rows = []
    for ch in cfg.channels:
        state = random_state(rng_for(ch, "c9-channel"), 2, 2)
        for s in cfg.sizes:
            res = covering_montecarlo(state, t, s, cfg.trials, cfg.seed, cfg.jobs)
            rows.append({"channel": ch, "S": s, "class_size": res.class_size, "mean": res.mean, "std": res.std})
    return rows


if __name__ == "__main__":
    cfg, out = parse_config(CoveringConfig, __doc__.splitlines()[0])
    write_rows(cfg, run(cfg), out)
