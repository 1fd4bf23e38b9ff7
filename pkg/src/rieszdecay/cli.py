"""Command-line entry point: ``rieszdecay <experiment> [options]``.

Each experiment writes ``<out>/<experiment>.csv`` and ``<out>/<experiment>.json``.
The exit status is 0 iff every assertion passes and every reported scalar
is finite; otherwise ``<out>/failures.json`` is written and the same report
is printed to stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .config import DEFAULTS_VERSION, load_config
from .experiments import run_from_config, write_records

EXPERIMENT_NAMES = ("main-inequality", "dyadic", "l2-average", "perimeter", "sobolev",
                    "sharpness", "sphere-divergence")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rieszdecay",
        description="Numerical checks of weak-type Fourier decay for Riesz potentials of measures.")
    parser.add_argument("experiment", choices=EXPERIMENT_NAMES + ("all",))
    parser.add_argument("--config", help="INI file overriding the versioned defaults")
    parser.add_argument("--out", default="results", help="output directory (default: results)")
    parser.add_argument("--seed", type=int, default=0, help="base seed for random-sign experiments")
    parser.add_argument("--workers", type=int, default=1, help="worker threads for sharded tasks")
    parser.add_argument("--window-max", type=float, default=None,
                        help="cap on every frequency-window schedule")
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="format of the summary printed to stdout")
    return parser


def _summary_lines(records, fmt: str) -> str:
    if fmt == "json":
        return json.dumps([{"experiment": r.experiment, "case": r.case, "passed": r.passed,
                            "wall_time": round(r.wall_time, 3)} for r in records], indent=2)
    lines = ["experiment,case,passed,wall_time"]
    lines += [f"{r.experiment},{r.case},{int(r.passed)},{r.wall_time:.3f}" for r in records]
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed < 0 or args.seed >= 2 ** 64:
        print("--seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    cfg = load_config(args.config)
    names = EXPERIMENT_NAMES if args.experiment == "all" else (args.experiment,)
    failures, all_records = [], []
    t0 = time.perf_counter()
    for name in names:
        try:
            records = run_from_config(name, cfg, args.seed, max(1, args.workers), args.window_max)
        except Exception as exc:  # reported, not raised, so other experiments still run
            failures.append({"experiment": name, "case": None, "error": type(exc).__name__,
                             "message": str(exc)})
            continue
        write_records(records, args.out, name)
        all_records.extend(records)
        for r in records:
            failed = [k for k, v in r.assertions.items() if not v]
            bad = r.nonfinite()
            if failed or bad:
                failures.append({"experiment": name, "case": r.case, "failed_assertions": failed,
                                 "nonfinite": bad})
    print(_summary_lines(all_records, args.format))
    if failures:
        report = {"defaults_version": DEFAULTS_VERSION, "seed": args.seed,
                  "wall_time": time.perf_counter() - t0, "failures": failures}
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "failures.json"), "w") as fh:
            json.dump(report, fh, indent=2)
        print(json.dumps(report), file=sys.stderr)
        return 1
    stale = os.path.join(args.out, "failures.json")
    if os.path.exists(stale):
        os.remove(stale)
    return 0


if __name__ == "__main__":
    sys.exit(main())
