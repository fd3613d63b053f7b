"""Command-line entry point.

Subcommands:
  run      simulate one scenario under one scheduler and write trace files
  compare  run a scenario under both schedulers with the same seed
  steady   apply the steady-state detector to a written trace directory

Set TSCHSIM_LOG (DEBUG/INFO/WARNING/ERROR) to control log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

from .experiment import (
    DIO_CSV,
    EVENTS_LOG,
    SteadyCriterion,
    TRICKLE_CSV,
    compare,
    detect_steady,
    run_experiment,
)
from .scenario import ConfigError, Scenario


def _setup_logging() -> None:
    level = os.environ.get("TSCHSIM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_scenario(path: str) -> Scenario:
    return Scenario.load(path)


def _cmd_run(args) -> int:
    scenario = _load_scenario(args.scenario)
    scheduler = args.scheduler or scenario.scheduler
    if scheduler == "both":
        raise ConfigError(
            "scenario leaves the scheduler open; pass --scheduler orchestra|minimal"
        )
    report, _sim = run_experiment(scenario, scheduler, seed=args.seed, out_dir=args.out)
    joined = max(report.join_ms.values()) if report.join_ms else None
    print(f"run complete: scheduler={report.scheduler} seed={report.seed}")
    print(f"  all joined by: {joined} ms")
    print(f"  steady state:  {report.steady_ms} ms")
    for rec in report.recoveries:
        print(
            f"  removal of node {rec['removed_node']} at {rec['removed_at_ms']} ms: "
            f"recovery {rec['recovery_ms']} ms"
        )
    print(f"  traces written to {args.out}")
    return 0


def _cmd_compare(args) -> int:
    scenario = _load_scenario(args.scenario)
    result = compare(scenario, seed=args.seed, out_dir=args.out)
    print(f"compare complete: seed={result['seed']}")
    for name, row in result["schedulers"].items():
        pct = row["transient_avg_percent"]
        pct_text = "n/a" if pct is None else f"{pct:.3f}%"
        rec = row["recovery_ms"]
        rec_text = "n/a" if rec is None else f"{rec} ms"
        print(f"  {name:10s} transient radio-on {pct_text:>9s}  recovery {rec_text}")
    ratio = result["transient_ratio"]
    if ratio is not None:
        print(f"  orchestra/minimal transient ratio: {ratio:.3f}")
    print(f"  outputs written to {args.out}")
    return 0


def _read_trace_dir(trace_dir: str):
    def read_csv(name, parse):
        path = os.path.join(trace_dir, name)
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                rows.append(parse(row))
        return rows

    trickle = read_csv(
        TRICKLE_CSV,
        lambda r: (int(r["time_ms"]), int(r["node"]), int(r["interval_ms"])),
    )
    dio = read_csv(
        DIO_CSV, lambda r: (int(r["time_ms"]), int(r["node"]), int(r["trigger_index"]))
    )
    removals = []
    events_path = os.path.join(trace_dir, EVENTS_LOG)
    if os.path.exists(events_path):
        with open(events_path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                if row["event"] == "removed":
                    removals.append((int(row["time_ms"]), int(row["node"])))
    return trickle, dio, removals


def _cmd_steady(args) -> int:
    trickle, dio, removals = _read_trace_dir(args.trace)
    nodes = {n for _t, n, _v in trickle} | {n for _t, n, _v in dio}
    criterion = SteadyCriterion(
        window_ms=int(args.window_s * 1000), interval_threshold_ms=args.interval_ms
    )
    steady = detect_steady(trickle, dio, nodes, criterion, from_ms=0, removals=removals)
    print(f"steady state: {'none' if steady is None else f'{steady} ms'}")
    for at, node in sorted(removals):
        after = detect_steady(
            trickle, dio, nodes, criterion, from_ms=at, removals=removals
        )
        rec = "none" if after is None else f"{after - at} ms"
        print(f"recovery after node {node} removal at {at} ms: {rec}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tschsim",
        description="TSCH mesh simulator with Orchestra and 6TiSCH-minimal scheduling",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario under one scheduler")
    p_run.add_argument("--scenario", required=True, help="scenario JSON file")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--scheduler", choices=("orchestra", "minimal"), default=None)
    p_run.add_argument("--out", required=True, help="output directory for traces")
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="run both schedulers on one scenario")
    p_cmp.add_argument("--scenario", required=True)
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.add_argument("--out", required=True)
    p_cmp.set_defaults(func=_cmd_compare)

    p_std = sub.add_parser("steady", help="steady-state detection on a trace directory")
    p_std.add_argument("--trace", required=True, help="directory holding trickle.csv/dio.csv")
    p_std.add_argument("--window-s", type=float, default=60.0)
    p_std.add_argument("--interval-ms", type=int, default=65_536)
    p_std.set_defaults(func=_cmd_steady)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
