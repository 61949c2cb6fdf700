"""Batch command-line front end.

Every command prints one payload (JSON or CSV) with the tool version and the
resolved run configuration. Randomness derives from ``--seed`` split by
command name and trial index.

Exit codes: 0 success, 1 input or validation error, 2 numerical verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .distill import distillable_search, verify_witness
from .measures import coherence_deficits, measure_report
from .protocols import majorization_transform, run_ecobit_to_cobit, unitary_via_cobits
from .qcore import (
    HADAMARD,
    DensityOperator,
    PureBipartiteState,
    VerificationError,
    ecobit,
    pure_fidelity,
    random_ket,
    random_unitary,
    rng_for,
)
from .rates import corner_rows
from .typeclasses import (
    EmpiricalType,
    TypicalityParams,
    bsc,
    channel_code_montecarlo,
    covering_montecarlo,
    type_class_size,
    typical_set_stats,
)

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    seed: int = 0
    tol: float = 1e-9
    format: str = "json"
    jobs: int = 1
    options: dict = field(default_factory=dict)


class InputError(ValueError):
    pass


# --------------------------------------------------------------------------- helpers


def load_state(path: str):
    """Pure state (``amps`` key) or density operator (``matrix`` key) from JSON."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read state file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a JSON object")
    if "amps" in data:
        return PureBipartiteState.from_json(data)
    if "matrix" in data:
        return DensityOperator.from_json(data)
    raise InputError(f"{path}: neither 'amps' nor 'matrix' present")


def _pure(path: str) -> PureBipartiteState:
    st = load_state(path)
    if not isinstance(st, PureBipartiteState):
        raise InputError(f"{path}: a pure state is required")
    return st


def _ints(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise InputError(f"expected comma-separated integers, got {text!r}") from exc


def _floats(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from exc


def _rows_to_csv(rows: list[dict]) -> str:
    import csv
    import io

    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def _meta(cfg: RunConfig) -> dict:
    return {"tool": "liocc", "version": __version__, "config": asdict(cfg)}


def _emit(cfg: RunConfig, result, rows: list[dict] | None = None) -> str:
    if cfg.format == "csv":
        if rows is None:
            raise InputError(f"command {cfg.command!r} has no CSV form")
        meta = json.dumps(_meta(cfg), sort_keys=True)
        return f"# {meta}\n" + _rows_to_csv(rows)
    return json.dumps({"metadata": _meta(cfg), "result": result}, indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------- commands


def cmd_measures(args, cfg):
    st = _pure(args.state)
    rep = measure_report(st).to_json()
    deficits = coherence_deficits(st, tol=cfg.tol).to_json()
    return _emit(cfg, {"measures": rep, "deficits": deficits}, [rep | deficits])


def cmd_rates(args, cfg):
    st = _pure(args.state)
    rows = corner_rows(st, args.kind)
    cfg.options["note"] = "asymptotic corner points"
    return _emit(cfg, {"kind": args.kind, "label": "asymptotic corner points", "corners": rows}, rows)


def _parse_vector(text: str | None, dim: int, rng) -> np.ndarray:
    if text is None:
        return random_ket(rng, dim)
    vals = _floats(text)
    if len(vals) != dim:
        raise InputError(f"psi needs {dim} amplitudes")
    v = np.array(vals, dtype=complex)
    if abs(np.linalg.norm(v) - 1) > 1e-9:
        raise InputError("psi must be normalized")
    return v


def cmd_simulate(args, cfg):
    if args.protocol == "ecobit-to-cobit":
        st = _pure(args.state) if args.state else ecobit()
        plus = np.array([1, 1]) / np.sqrt(2)
        branches = []
        for outcome, p, post in run_ecobit_to_cobit(st):
            bob = post.matrix[outcome]
            branches.append(
                {
                    "outcome": outcome,
                    "probability": p,
                    "fidelity_plus": pure_fidelity(bob, plus),
                    "bob_state": [[z.real, z.imag] for z in bob],
                }
            )
        if args.state is None and min(b["fidelity_plus"] for b in branches) < 1 - max(cfg.tol, 1e-10):
            raise VerificationError("eCoBit did not yield a CoBit")
        rows = [{k: v for k, v in b.items() if k != "bob_state"} for b in branches]
        return _emit(cfg, {"protocol": args.protocol, "branches": branches}, rows)

    if args.protocol == "unitary-via-cobits":
        name = args.unitary
        if name == "hadamard":
            u = HADAMARD
        elif name == "identity":
            u = np.eye(args.dim)
        elif name == "random":
            u = random_unitary(rng_for(cfg.seed, "simulate", "unitary"), args.dim)
        else:
            raise InputError(f"unknown unitary {name!r}")
        psi = _parse_vector(args.psi, u.shape[0], rng_for(cfg.seed, "simulate", "psi"))
        sim = unitary_via_cobits(u, psi)
        if sim.min_fidelity < 1 - cfg.tol or not sim.all_incoherent or sim.outcome_tv() > 1e-9:
            raise VerificationError(f"unitary simulation failed: {sim.to_json()}")
        out = sim.to_json()
        return _emit(cfg, {"protocol": args.protocol, **out}, out["branches"])

    if args.protocol == "majorize":
        psi = _pure(args.state) if args.state else ecobit()
        phi = _pure(args.target) if args.target else PureBipartiteState.from_matrix(np.diag([1.0, 0.0]))
        _, rep = majorization_transform(psi, phi)
        out = rep.to_json()
        return _emit(cfg, {"protocol": args.protocol, **out}, out["branches"])
    raise InputError(f"unknown protocol {args.protocol!r}")


def cmd_typeclass(args, cfg):
    if args.counts:
        t = EmpiricalType(_ints(args.counts))
        size = type_class_size(t)
        row = {"type": "-".join(map(str, t.counts)), "n": t.n, "class_size": str(size)}
        return _emit(cfg, row, [row])
    if not args.p:
        raise InputError("give --counts or --p with --n and --delta")
    stats = typical_set_stats(_floats(args.p), TypicalityParams(args.delta, args.n))
    rows = stats.rows()
    for r in rows:
        r["class_size"] = str(r["class_size"])
    result = {
        "probability": stats.probability,
        "probability_exact": str(stats.probability_exact),
        "num_types": len(stats.types),
        "bracket_valid": stats.bracket_valid,
        "all_in_bracket": stats.all_in_bracket,
        "types": rows,
    }
    return _emit(cfg, result, rows)


def cmd_montecarlo(args, cfg):
    t = EmpiricalType(_ints(args.type))
    rows = []
    if args.kind == "covering":
        st = _pure(args.state) if args.state else ecobit()
        for s in _ints(args.sizes):
            res = covering_montecarlo(st, t, s, args.trials, cfg.seed, cfg.jobs)
            rows.append({"S": s, "trials": args.trials, "mean": res.mean, "std": res.std, "class_size": res.class_size})
    else:
        for c in _ints(args.sizes):
            res = channel_code_montecarlo(bsc(args.flip), t, c, args.trials, cfg.seed, cfg.jobs)
            rows.append({"C": c, "trials": args.trials, "mean_success": res.mean, "benchmark_bits": res.benchmark_bits})
    return _emit(cfg, {"kind": args.kind, "rows": rows}, rows)


def cmd_distill(args, cfg):
    st = load_state(args.state)
    wit = distillable_search(st, args.k_max, args.budget, cfg.seed)
    if wit is None:
        result = {"result": "inconclusive"}
        return _emit(cfg, result, [result])
    if not verify_witness(st, wit):
        raise VerificationError("witness failed re-verification")
    result = {"result": "witness", "witness": wit.to_json()}
    return _emit(cfg, result, [{"result": "witness", "k": wit.k, "negativity": wit.negativity}])


COMMANDS = {
    "measures": cmd_measures,
    "rates": cmd_rates,
    "simulate": cmd_simulate,
    "typeclass": cmd_typeclass,
    "montecarlo": cmd_montecarlo,
    "distill": cmd_distill,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="root seed (64-bit)")
    common.add_argument("--tol", type=float, default=1e-9, help="verification tolerance")
    common.add_argument("--out", help="write the payload here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--jobs", type=int, default=1, help="worker threads; results do not depend on it")

    parser = argparse.ArgumentParser(prog="liocc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"liocc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measures", parents=[common], help="entropic measures of a pure state")
    p.add_argument("state")

    p = sub.add_parser("rates", parents=[common], help="asymptotic rate-region corners")
    p.add_argument("state")
    p.add_argument("--kind", choices=("formation", "distillation"), default="formation")

    p = sub.add_parser("simulate", parents=[common], help="run an explicit protocol")
    p.add_argument("--protocol", required=True, choices=("ecobit-to-cobit", "unitary-via-cobits", "majorize"))
    p.add_argument("--state", help="input state JSON (default: eCoBit)")
    p.add_argument("--target", help="target state JSON for majorize (default |00>)")
    p.add_argument("--unitary", default="hadamard", help="hadamard | identity | random")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--psi", help="comma-separated real amplitudes (default: seeded random)")

    p = sub.add_parser("typeclass", parents=[common], help="type class sizes and typical sets")
    p.add_argument("--counts", help="e.g. 2,2")
    p.add_argument("--p", help="source distribution, e.g. 0.5,0.5")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--delta", type=float, default=0.1)

    p = sub.add_parser("montecarlo", parents=[common], help="covering / channel-code Monte-Carlo")
    p.add_argument("--kind", choices=("covering", "code"), default="covering")
    p.add_argument("--state", help="state JSON for covering (default: eCoBit)")
    p.add_argument("--type", default="3,3", help="type counts, e.g. 3,3")
    p.add_argument("--sizes", default="2,4,8,16", help="S values (covering) or C values (code)")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--flip", type=float, default=0.1, help="BSC flip probability (code)")

    p = sub.add_parser("distill", parents=[common], help="search for an incoherent filter witness")
    p.add_argument("state")
    p.add_argument("--k-max", type=int, default=2)
    p.add_argument("--budget", type=int, default=200)
    return parser


DEFAULT_FORMAT = {"rates": "csv", "typeclass": "csv", "montecarlo": "csv"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    fmt = args.format or DEFAULT_FORMAT.get(args.command, "json")
    inputs = [getattr(args, k) for k in ("state", "target") if getattr(args, k, None)]
    skip = {"command", "seed", "tol", "out", "format", "jobs", "state", "target"}
    options = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    cfg = RunConfig(args.command, inputs, args.seed, args.tol, fmt, max(1, args.jobs), options)
    try:
        payload = COMMANDS[args.command](args, cfg)
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (ValueError, KeyError, TypeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.out:
        try:
            Path(args.out).write_text(payload, encoding="utf-8")
        except OSError as exc:
            print(f"input error: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_INPUT
    else:
        sys.stdout.write(payload)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
