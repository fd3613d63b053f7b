"""Figure rendering from simulator trace CSVs.

Three figure kinds: per-node trickle-interval step series, per-node DIO
trigger scatter, and a transient radio-on bar comparison. Axis units are
fixed to the conventions of the traces: x in minutes, trickle y in clock
ticks (1000 ticks per second). Inputs are read-only; rendering never
touches the run directory.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

MS_PER_MINUTE = 60_000.0


class MalformedCsvError(ValueError):
    """A trace CSV that cannot be parsed; carries the offending row number."""

    def __init__(self, path: str, row: int, reason: str):
        super().__init__(f"{path}: row {row}: {reason}")
        self.path = path
        self.row = row


@dataclass(frozen=True)
class FigureSpec:
    kind: str  # trickle_series | dio_scatter | energy_bars
    inputs: tuple[str, ...]
    output: str
    removal_min: Optional[float] = None
    labels: tuple[str, ...] = ()


def _read_rows(path: str, columns: tuple[str, ...]) -> list[tuple]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return rows
        if [h.strip() for h in header] != list(columns):
            raise MalformedCsvError(path, 1, f"expected header {','.join(columns)}")
        for lineno, raw in enumerate(reader, start=2):
            if not raw or (len(raw) == 1 and not raw[0].strip()):
                continue
            if len(raw) != len(columns):
                raise MalformedCsvError(path, lineno, f"expected {len(columns)} fields")
            try:
                rows.append(tuple(float(x) for x in raw))
            except ValueError as exc:
                raise MalformedCsvError(path, lineno, str(exc)) from exc
    return rows


def read_trickle(path: str) -> list[tuple[float, int, float]]:
    return [(t, int(n), i) for t, n, i in _read_rows(path, ("time_ms", "node", "interval_ms"))]


def read_dio(path: str) -> list[tuple[float, int, int]]:
    return [
        (t, int(n), int(i))
        for t, n, i in _read_rows(path, ("time_ms", "node", "trigger_index"))
    ]


def read_energy(path: str) -> list[tuple[str, int, float, float, float]]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return rows
        expected = ["window", "node", "on_ms", "window_ms", "percent"]
        if [h.strip() for h in header] != expected:
            raise MalformedCsvError(path, 1, f"expected header {','.join(expected)}")
        for lineno, raw in enumerate(reader, start=2):
            if not raw or (len(raw) == 1 and not raw[0].strip()):
                continue
            if len(raw) != 5:
                raise MalformedCsvError(path, lineno, "expected 5 fields")
            try:
                rows.append((raw[0], int(raw[1]), float(raw[2]), float(raw[3]), float(raw[4])))
            except ValueError as exc:
                raise MalformedCsvError(path, lineno, str(exc)) from exc
    return rows


def read_removals(events_path: str) -> dict[int, float]:
    """Removal times from an events.log, if one sits next to the traces."""
    removals: dict[int, float] = {}
    if not os.path.exists(events_path):
        return removals
    with open(events_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for raw in reader:
            if len(raw) >= 3 and raw[2] == "removed":
                removals[int(raw[1])] = float(raw[0])
    return removals


# -- series construction (kept separate from drawing so tests can inspect it) ------


def trickle_step_series(
    rows: list[tuple[float, int, float]],
    removals: Optional[dict[int, float]] = None,
    t_end_ms: Optional[float] = None,
) -> dict[int, tuple[list[float], list[float]]]:
    """Per-node step series in minutes/ticks.

    A removed node's series ends at its removal instant; every other
    node's last interval extends to the end of the trace.
    """
    removals = removals or {}
    if t_end_ms is None:
        t_end_ms = max((t for t, _n, _i in rows), default=0.0)
        t_end_ms = max([t_end_ms] + list(removals.values()))
    series: dict[int, tuple[list[float], list[float]]] = {}
    for t, node, interval in sorted(rows, key=lambda r: (r[1], r[0])):
        xs, ys = series.setdefault(node, ([], []))
        if xs:  # horizontal segment up to the change point
            xs.append(t / MS_PER_MINUTE)
            ys.append(ys[-1])
        xs.append(t / MS_PER_MINUTE)
        ys.append(interval)
    for node, (xs, ys) in series.items():
        stop = removals.get(node, t_end_ms)
        if xs and stop / MS_PER_MINUTE > xs[-1]:
            xs.append(stop / MS_PER_MINUTE)
            ys.append(ys[-1])
    return series


def dio_scatter_series(rows) -> dict[int, tuple[list[float], list[int]]]:
    series: dict[int, tuple[list[float], list[int]]] = {}
    for t, node, idx in sorted(rows, key=lambda r: (r[1], r[0])):
        xs, ys = series.setdefault(node, ([], []))
        xs.append(t / MS_PER_MINUTE)
        ys.append(idx)
    return series


def energy_bar_values(
    inputs: tuple[str, ...], labels: tuple[str, ...]
) -> tuple[list[str], list[float]]:
    """One bar per input energy.csv: mean percent over its transient window.

    Falls back to the first window when no window is labeled "transient".
    """
    names, values = [], []
    for path, label in zip(inputs, labels):
        rows = read_energy(path)
        if not rows:
            names.append(label)
            values.append(0.0)
            continue
        windows = [r[0] for r in rows]
        window = "transient" if "transient" in windows else windows[0]
        pct = [r[4] for r in rows if r[0] == window]
        names.append(label)
        values.append(sum(pct) / len(pct))
    return names, values


# -- drawing ------------------------------------------------------------------------


def _removal_marker(ax, removal_min: Optional[float]):
    if removal_min is not None:
        ax.axvline(removal_min, color="0.4", linestyle="--", linewidth=1,
                   label=f"removal at {removal_min:g} min")


def render(spec: FigureSpec) -> str:
    """Render one figure to spec.output; returns the output path."""
    if spec.kind == "trickle_series":
        (path,) = spec.inputs
        removals = read_removals(os.path.join(os.path.dirname(path), "events.log"))
        series = trickle_step_series(read_trickle(path), removals)
        fig, ax = plt.subplots(figsize=(8, 4.5))
        for node in sorted(series):
            xs, ys = series[node]
            suffix = " (removed)" if node in removals else ""
            ax.plot(xs, ys, label=f"node {node}{suffix}")
        _removal_marker(ax, spec.removal_min)
        ax.set_xlabel("time (minutes)")
        ax.set_ylabel("trickle interval (clock ticks, 1000 = 1 s)")
        ax.set_title("Trickle interval vs. time")
        if series or spec.removal_min is not None:
            ax.legend(fontsize=8)
    elif spec.kind == "dio_scatter":
        (path,) = spec.inputs
        series = dio_scatter_series(read_dio(path))
        fig, ax = plt.subplots(figsize=(8, 4.5))
        for node in sorted(series):
            xs, ys = series[node]
            ax.scatter(xs, ys, s=18, label=f"node {node}")
        _removal_marker(ax, spec.removal_min)
        ax.set_xlabel("time (minutes)")
        ax.set_ylabel("DIO trigger index")
        ax.set_title("DIO triggers vs. time")
        if series or spec.removal_min is not None:
            ax.legend(fontsize=8)
    elif spec.kind == "energy_bars":
        labels = spec.labels or tuple(
            os.path.basename(os.path.dirname(p)) or p for p in spec.inputs
        )
        names, values = energy_bar_values(spec.inputs, labels)
        fig, ax = plt.subplots(figsize=(5, 4.5))
        ax.bar(names, values, color=["tab:blue", "tab:orange"][: len(names)])
        for i, v in enumerate(values):
            ax.annotate(f"{v:.2f}%", (i, v), ha="center", va="bottom")
        ax.set_ylabel("radio on (% of transient window)")
        ax.set_title("Transient radio-on time")
    else:
        raise ValueError(f"unknown figure kind {spec.kind!r}")
    os.makedirs(os.path.dirname(spec.output) or ".", exist_ok=True)
    fig.tight_layout()
    fig.savefig(spec.output, dpi=120)
    plt.close(fig)
    return spec.output
