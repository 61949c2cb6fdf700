"""Shared helpers: dataclass configs overridable from the command line."""

import argparse
import csv
import dataclasses
import io
import json
import sys

from liocc import __version__


def parse_config(cls, description):
    """Build ``cls`` from ``--field value`` flags; tuple fields take comma lists."""
    parser = argparse.ArgumentParser(description=description)
    defaults = cls()
    for f in dataclasses.fields(cls):
        default = getattr(defaults, f.name)
        kind = type(default[0]) if isinstance(default, tuple) else type(default)
        parser.add_argument(f"--{f.name.replace('_', '-')}", default=None, help=f"default {default!r}")
        parser.set_defaults(**{f"_kind_{f.name}": kind})
    parser.add_argument("--out", help="CSV destination (default stdout)")
    args = vars(parser.parse_args())
    values = {}
    for f in dataclasses.fields(cls):
        raw = args[f.name]
        if raw is None:
            continue
        kind = args[f"_kind_{f.name}"]
        if isinstance(getattr(defaults, f.name), tuple):
            values[f.name] = tuple(kind(x) for x in raw.split(","))
        else:
            values[f.name] = kind(raw)
    return cls(**values), args["out"]


def write_rows(cfg, rows, out=None):
    buf = io.StringIO()
    meta = {"tool": "liocc", "version": __version__, "config": dataclasses.asdict(cfg)}
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in r.items()} for r in rows)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
