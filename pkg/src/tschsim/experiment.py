"""Experiment orchestration: run a scenario under one scheduler, detect
steady state from the trickle/DIO traces, compare schedulers over the
same seed, and emit the CSV trace files.

Steady state is declared at the earliest instant where every alive node's
current trickle interval has reached the threshold and no DIO trigger
occurred anywhere in the trailing quiet window.
"""

from __future__ import annotations

import bisect
import json
import os
from dataclasses import dataclass, field
from typing import Optional

from .scenario import ConfigError, Scenario, SCHEDULERS
from .sim import Simulation

DEFAULT_QUIET_WINDOW_MS = 60_000
DEFAULT_INTERVAL_THRESHOLD_MS = 65_536  # I_min * 2**4

TRICKLE_CSV = "trickle.csv"
DIO_CSV = "dio.csv"
ENERGY_CSV = "energy.csv"
EVENTS_LOG = "events.log"
REPORT_JSON = "report.json"


@dataclass(frozen=True)
class SteadyCriterion:
    window_ms: int = DEFAULT_QUIET_WINDOW_MS
    interval_threshold_ms: int = DEFAULT_INTERVAL_THRESHOLD_MS

    def __post_init__(self):
        if self.window_ms <= 0:
            raise ConfigError("steady-state quiet window must be positive")
        if self.interval_threshold_ms <= 0:
            raise ConfigError("steady-state interval threshold must be positive")


def detect_steady(
    trickle: list[tuple[int, int, int]],
    dio: list[tuple[int, int, int]],
    node_ids: set[int],
    criterion: SteadyCriterion = SteadyCriterion(),
    from_ms: int = 0,
    until_ms: Optional[int] = None,
    removals: Optional[list[tuple[int, int]]] = None,
) -> Optional[int]:
    """Earliest t in [from_ms, until_ms] satisfying the steady criterion, or None.

    `trickle` rows are (time, node, interval_ms) changes, `dio` rows are
    (time, node, trigger_index) events, `removals` are (time, node) pairs.
    Nodes removed before t are ignored; a node with no interval entry yet
    counts as not qualified.

    The quiet window must consist of post-`from` evidence, so t is at
    least from_ms + window. Without this floor, asking for steadiness
    from a disruption instant (e.g. a node removal) would answer with the
    disruption time itself: the trailing window would still be looking at
    the calm that preceded the disruption.
    """
    if not node_ids:
        return None
    removals = removals or []
    removed_at = {node: t for t, node in removals}
    series: dict[int, list[tuple[int, int]]] = {nid: [] for nid in node_ids}
    horizon = from_ms
    for t, node, interval in trickle:
        if node in series:
            series[node].append((t, interval))
        horizon = max(horizon, t)
    triggers = sorted(t for t, _node, _idx in dio)
    if triggers:
        horizon = max(horizon, triggers[-1])
    if until_ms is None:
        until_ms = horizon

    def interval_at(nid: int, t: int) -> int:
        cur = 0
        for st, interval in series[nid]:
            if st <= t:
                cur = interval
            else:
                break
        return cur

    def qualified(t: int) -> bool:
        for nid in node_ids:
            death = removed_at.get(nid)
            if death is not None and death <= t:
                continue
            if interval_at(nid, t) < criterion.interval_threshold_ms:
                return False
        return True

    def quiet(t: int) -> bool:
        lo = t - criterion.window_ms
        # any trigger in (lo, t] breaks the quiet window
        left = bisect.bisect_right(triggers, lo)
        right = bisect.bisect_right(triggers, t)
        return left == right

    floor = from_ms + criterion.window_ms
    candidates = {floor}
    candidates.update(t for t, _n, _i in trickle if t >= floor)
    candidates.update(t for t in removed_at.values() if t >= floor)
    candidates.update(t + criterion.window_ms for t in triggers
                      if t + criterion.window_ms >= floor)
    for t in sorted(candidates):
        if t > until_ms:
            break
        if qualified(t) and quiet(t):
            return t
    return None


@dataclass
class RunReport:
    scheduler: str
    seed: int
    duration_ms: int
    join_ms: dict[int, int] = field(default_factory=dict)
    steady_ms: Optional[int] = None
    recoveries: list[dict] = field(default_factory=list)
    windows: list[dict] = field(default_factory=list)
    deliveries_by_origin: dict[int, int] = field(default_factory=dict)
    app_drops: dict[int, int] = field(default_factory=dict)
    inconsistencies: dict[int, int] = field(default_factory=dict)
    negotiation_frames: int = 0

    def to_dict(self) -> dict:
        return {
            "scheduler": self.scheduler,
            "seed": self.seed,
            "duration_ms": self.duration_ms,
            "join_ms": {str(k): v for k, v in sorted(self.join_ms.items())},
            "steady_ms": self.steady_ms,
            "recoveries": self.recoveries,
            "windows": self.windows,
            "deliveries_by_origin": {
                str(k): v for k, v in sorted(self.deliveries_by_origin.items())
            },
            "app_drops": {str(k): v for k, v in sorted(self.app_drops.items())},
            "inconsistencies": {
                str(k): v for k, v in sorted(self.inconsistencies.items())
            },
            "negotiation_frames": self.negotiation_frames,
        }


def _window_rows(sim: Simulation) -> list[dict]:
    removal_at = dict((node, t) for t, node in sim.trace.removals)
    rows = []
    for snap in sim.ledger.closed_windows:
        if snap.window_ms <= 0:
            continue
        alive = [
            nid
            for nid in sorted(sim.nodes)
            if removal_at.get(nid) is None or removal_at[nid] >= snap.end_ms
        ]
        percents = {nid: snap.percent(nid) for nid in sorted(sim.nodes)}
        avg = sum(percents[nid] for nid in alive) / len(alive) if alive else 0.0
        rows.append(
            {
                "label": snap.label,
                "start_ms": snap.start_ms,
                "end_ms": snap.end_ms,
                "percent": {str(n): percents[n] for n in sorted(percents)},
                "avg_alive_percent": avg,
            }
        )
    return rows


def build_report(sim: Simulation, criterion: SteadyCriterion) -> RunReport:
    scenario = sim.scenario
    node_ids = set(sim.nodes)
    report = RunReport(sim.scheduler_name, sim.seed, scenario.duration_ms)

    for t, node, event, _detail in sim.trace.events:
        if event == "parent" and node not in report.join_ms:
            report.join_ms[node] = t
        elif event == "joined" and _detail == "coordinator":
            report.join_ms[node] = t

    report.steady_ms = detect_steady(
        sim.trace.trickle, sim.trace.dio, node_ids, criterion,
        from_ms=0, until_ms=scenario.duration_ms, removals=sim.trace.removals,
    )
    for t, node in sim.trace.removals:
        steady_at = detect_steady(
            sim.trace.trickle, sim.trace.dio, node_ids, criterion,
            from_ms=t, until_ms=scenario.duration_ms, removals=sim.trace.removals,
        )
        report.recoveries.append(
            {
                "removed_node": node,
                "removed_at_ms": t,
                "steady_at_ms": steady_at,
                "recovery_ms": (steady_at - t) if steady_at is not None else None,
            }
        )
    report.windows = _window_rows(sim)
    for _t, origin, _seq in sim.trace.deliveries:
        report.deliveries_by_origin[origin] = report.deliveries_by_origin.get(origin, 0) + 1
    report.app_drops = {
        nid: sim.nodes[nid].app_drops for nid in sorted(sim.nodes)
        if sim.nodes[nid].app_drops
    }
    for _t, node, _cause in sim.trace.inconsistencies:
        report.inconsistencies[node] = report.inconsistencies.get(node, 0) + 1
    report.negotiation_frames = sim.negotiation_frames
    return report


# -- trace files -----------------------------------------------------------------


def write_traces(sim: Simulation, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, TRICKLE_CSV), "w", encoding="utf-8") as fh:
        fh.write("time_ms,node,interval_ms\n")
        for t, node, interval in sim.trace.trickle:
            fh.write(f"{t},{node},{interval}\n")
    with open(os.path.join(out_dir, DIO_CSV), "w", encoding="utf-8") as fh:
        fh.write("time_ms,node,trigger_index\n")
        for t, node, idx in sim.trace.dio:
            fh.write(f"{t},{node},{idx}\n")
    with open(os.path.join(out_dir, ENERGY_CSV), "w", encoding="utf-8") as fh:
        fh.write("window,node,on_ms,window_ms,percent\n")
        for snap in sim.ledger.closed_windows:
            if snap.window_ms <= 0:
                continue
            for nid in sorted(sim.nodes):
                on = snap.on_ms.get(nid, 0)
                fh.write(
                    f"{snap.label},{nid},{on},{snap.window_ms},"
                    f"{100.0 * on / snap.window_ms:.6f}\n"
                )
    with open(os.path.join(out_dir, EVENTS_LOG), "w", encoding="utf-8") as fh:
        fh.write("time_ms,node,event,detail\n")
        for t, node, event, detail in sim.trace.events:
            fh.write(f"{t},{node},{event},{detail}\n")


def write_report(report: RunReport, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, REPORT_JSON), "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- entry points ------------------------------------------------------------------


def run_experiment(
    scenario: Scenario,
    scheduler: str,
    seed: Optional[int] = None,
    out_dir: Optional[str] = None,
    criterion: SteadyCriterion = SteadyCriterion(),
) -> tuple[RunReport, Simulation]:
    """Validate, simulate, detect steady states, and optionally write traces."""
    scenario.validate()
    if scheduler not in SCHEDULERS:
        raise ConfigError(f"run needs a concrete scheduler, one of {SCHEDULERS}")
    sim = Simulation(scenario, scheduler, seed)
    sim.run()
    report = build_report(sim, criterion)
    if out_dir is not None:
        write_traces(sim, out_dir)
        write_report(report, out_dir)
    return report, sim


def transient_window(report: RunReport, removal_ms: Optional[int]) -> Optional[dict]:
    """The energy window covering the transient state after a removal."""
    for row in report.windows:
        if row["label"] == "transient":
            return row
    if removal_ms is not None:
        for row in report.windows:
            if row["start_ms"] == removal_ms:
                return row
    return report.windows[0] if report.windows else None


def compare(
    scenario: Scenario,
    seed: Optional[int] = None,
    out_dir: Optional[str] = None,
    criterion: SteadyCriterion = SteadyCriterion(),
) -> dict:
    """Run the scenario under both schedulers with one seed and compare them."""
    scenario.validate()
    if scenario.scheduler not in ("both",):
        raise ConfigError(
            "compare requires the scenario to leave the scheduler open "
            f"(scheduler='both'), got {scenario.scheduler!r}"
        )
    removal_ms = min(
        (ev.at for ev in scenario.events if ev.action == "remove_node"), default=None
    )
    result: dict = {"seed": scenario.seed if seed is None else seed, "schedulers": {}}
    for name in SCHEDULERS:
        sub = os.path.join(out_dir, name) if out_dir is not None else None
        report, _sim = run_experiment(scenario, name, seed, sub, criterion)
        window = transient_window(report, removal_ms)
        recovery = report.recoveries[0]["recovery_ms"] if report.recoveries else None
        result["schedulers"][name] = {
            "report": report.to_dict(),
            "transient_avg_percent": window["avg_alive_percent"] if window else None,
            "transient_window": window["label"] if window else None,
            "recovery_ms": recovery,
        }
    orch = result["schedulers"]["orchestra"]["transient_avg_percent"]
    mini = result["schedulers"]["minimal"]["transient_avg_percent"]
    result["transient_ratio"] = (orch / mini) if orch is not None and mini else None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "comparison.json"), "w", encoding="utf-8") as fh:
            json.dump(result, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(os.path.join(out_dir, "comparison.csv"), "w", encoding="utf-8") as fh:
            fh.write("scheduler,transient_avg_percent,recovery_ms\n")
            for name in SCHEDULERS:
                row = result["schedulers"][name]
                pct = row["transient_avg_percent"]
                fh.write(
                    f"{name},"
                    f"{'' if pct is None else format(pct, '.6f')},"
                    f"{'' if row['recovery_ms'] is None else row['recovery_ms']}\n"
                )
    return result
