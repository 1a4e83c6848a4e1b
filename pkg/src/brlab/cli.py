"""Command-line interface.

Subcommands: ``dominate``, ``prop41``, ``prop42``, ``decay``, ``weights``,
``vv``, ``indices``.  Outputs are CSV rows plus a JSON summary in the
output directory; identical config and seed give byte-identical files.

Exit codes: 0 on completion, 2 on precondition errors (bad flags, ranges,
config), 3 on threshold failure inside the selection algorithm.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from fractions import Fraction

from .harness import (
    ExperimentConfig,
    run_decay,
    run_domination,
    run_prop41,
    run_prop42,
    run_vector_valued,
    run_weights,
)
from .indices import ExponentRecord
from .sparse import ThresholdFailure

_RUNNERS = {
    "dominate": run_domination,
    "prop41": run_prop41,
    "prop42": run_prop42,
    "decay": run_decay,
    "weights": run_weights,
    "vv": run_vector_valued,
}

# per-command grid defaults: the localized estimates need a larger domain
_GRID_DEFAULTS = {
    "dominate": (16.0, 512),
    "prop41": (64.0, 512),
    "prop42": (64.0, 512),
    "decay": (16.0, 512),
    "weights": (4.0, 128),
    "vv": (16.0, 256),
}
_TRIAL_DEFAULTS = {"dominate": 50, "prop41": 3, "prop42": 5,
                   "decay": 1, "weights": 1, "vv": 1}


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--config", help="line-oriented 'key = value' config file")
    sub.add_argument("--grid-n", type=int, help="samples per axis (power of two)")
    sub.add_argument("--grid-l", type=float, help="domain side length")
    sub.add_argument("--delta", type=float, help="smoothness exponent")
    sub.add_argument("--p0", help="inner exponent, exact rational like 6/5")
    sub.add_argument("--q0", help="dual-side exponent, exact rational")
    sub.add_argument("--p", help="Lebesgue exponent for weighted/vv runs")
    sub.add_argument("--q", help="inner exponent for vv runs")
    sub.add_argument("--trials", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--workers", type=int)
    sub.add_argument("--out", help="output directory (default: config output_dir)")


def _build_config(cmd: str, args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
    else:
        gl, gn = _GRID_DEFAULTS[cmd]
        cfg = ExperimentConfig(grid_l=gl, grid_n=gn, trials=_TRIAL_DEFAULTS[cmd])
    updates = {}
    if args.grid_n is not None:
        updates["grid_n"] = args.grid_n
    if args.grid_l is not None:
        updates["grid_l"] = args.grid_l
    if args.delta is not None:
        updates["delta"] = args.delta
    for key in ("p0", "q0", "p", "q"):
        val = getattr(args, key)
        if val is not None:
            updates[key] = Fraction(val)
    if args.trials is not None:
        updates["trials"] = args.trials
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.out is not None:
        updates["output_dir"] = args.out
    return replace(cfg, **updates)


def _run_indices(args) -> int:
    record = ExponentRecord.compute(
        n=args.dim,
        p0=Fraction(args.p0 or "6/5"),
        q0=Fraction(args.q0 or "2"),
        p=Fraction(args.p or "8/5"),
        q=Fraction(args.q) if args.q else None,
        delta=Fraction(args.delta_exact) if args.delta_exact else None,
        provider=args.provider,
    )
    rows = record.rows()
    width = max(len(k) for k, _ in rows)
    for key, val in rows:
        print(f"{key:<{width}}  {val}")
    print()
    print(",".join(k for k, _ in rows))
    print(",".join(v for _, v in rows))
    if args.out:
        from pathlib import Path

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        text = (",".join(k for k, _ in rows) + "\n"
                + ",".join(v for _, v in rows) + "\n")
        (out / "indices.csv").write_text(text, encoding="utf-8", newline="\n")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="brlab",
        description="Numerical laboratory for Bochner-Riesz sparse domination",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for cmd in _RUNNERS:
        sub = subs.add_parser(cmd)
        _add_common(sub)
    idx = subs.add_parser("indices", help="print the exponent record table")
    idx.add_argument("--dim", type=int, default=2)
    idx.add_argument("--p0")
    idx.add_argument("--q0")
    idx.add_argument("--p")
    idx.add_argument("--q")
    idx.add_argument("--delta-exact", help="exact rational delta, e.g. 1/5")
    idx.add_argument("--provider", default="dim2_solved",
                     choices=("dim2_solved", "assume_conjecture"))
    idx.add_argument("--out")

    args = parser.parse_args(argv)
    try:
        if args.command == "indices":
            return _run_indices(args)
        cfg = _build_config(args.command, args)
        report = _RUNNERS[args.command](cfg)
        csv_path, json_path = report.write(cfg.output_dir)
        print(f"{args.command}: {len(report.rows)} rows -> {csv_path}")
        for key, val in sorted(report.summary.items()):
            print(f"  {key} = {val}")
        return 0
    except ThresholdFailure as exc:
        print(f"threshold failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        print(f"precondition error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
