"""`plots` command: render every figure a run directory supports.

A single-run directory (trickle.csv/dio.csv/energy.csv) yields one figure
per kind; a comparison directory (orchestra/ and minimal/ subruns) yields
per-run trickle and DIO charts plus one energy bar chart side by side.
"""

from __future__ import annotations

import argparse
import os
import sys

from .figures import FigureSpec, MalformedCsvError, read_removals, render

MS_PER_MINUTE = 60_000.0


def _auto_removal_min(run_dir: str) -> float | None:
    removals = read_removals(os.path.join(run_dir, "events.log"))
    if not removals:
        return None
    return min(removals.values()) / MS_PER_MINUTE


def _specs_for_single_run(run_dir: str, out_dir: str, removal_min, suffix="") -> list[FigureSpec]:
    if removal_min is None:
        removal_min = _auto_removal_min(run_dir)
    tag = f"_{suffix}" if suffix else ""
    return [
        FigureSpec(
            "trickle_series",
            (os.path.join(run_dir, "trickle.csv"),),
            os.path.join(out_dir, f"trickle{tag}.png"),
            removal_min,
        ),
        FigureSpec(
            "dio_scatter",
            (os.path.join(run_dir, "dio.csv"),),
            os.path.join(out_dir, f"dio{tag}.png"),
            removal_min,
        ),
    ]


def build_specs(in_dir: str, out_dir: str, removal_min) -> list[FigureSpec]:
    sub = [d for d in ("orchestra", "minimal") if os.path.isdir(os.path.join(in_dir, d))]
    if len(sub) == 2:
        specs = []
        for name in sub:
            specs.extend(
                _specs_for_single_run(
                    os.path.join(in_dir, name), out_dir, removal_min, suffix=name
                )
            )
        specs.append(
            FigureSpec(
                "energy_bars",
                tuple(os.path.join(in_dir, name, "energy.csv") for name in sub),
                os.path.join(out_dir, "energy_bars.png"),
                labels=tuple(sub),
            )
        )
        return specs
    specs = _specs_for_single_run(in_dir, out_dir, removal_min)
    specs.append(
        FigureSpec(
            "energy_bars",
            (os.path.join(in_dir, "energy.csv"),),
            os.path.join(out_dir, "energy_bars.png"),
            labels=("run",),
        )
    )
    return specs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots", description="render figures from tschsim run directories"
    )
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="run directory (or compare output directory)")
    parser.add_argument("--out", dest="out_dir", required=True,
                        help="directory for the rendered images")
    parser.add_argument("--removal-min", type=float, default=None,
                        help="vertical marker at this minute (default: from events.log)")
    args = parser.parse_args(argv)

    if not os.path.isdir(args.in_dir):
        print(f"error: {args.in_dir} is not a directory", file=sys.stderr)
        return 2
    try:
        written = [render(spec) for spec in build_specs(args.in_dir, args.out_dir,
                                                        args.removal_min)]
    except MalformedCsvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
