"""Declarative experiment scenarios: topology, scheduler choice, traffic,
and timed events (node removal, energy-window resets), loadable from JSON.

The bundled ``paper.json`` encodes the six-node two-path topology with
1 s upward traffic, removal of node 10 and an energy reset at minute 3, a
second reset at minute 7 closing the transient measurement window, and an
eight-minute duration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from importlib import resources
from typing import Optional

from .mac import DEFAULT_HOPPING_CHANNELS
from .scheduling import (
    MinimalConfig,
    OrchestraConfig,
    OrchestraRule,
    RuleKind,
    TrafficClass,
)

SCHEDULERS = ("orchestra", "minimal")


class ConfigError(ValueError):
    """A scenario that fails validation; carries a human-readable reason."""


@dataclass
class NodeSpec:
    node_id: int
    position: tuple[float, float]
    role: str = "receiver"  # root | sender | receiver


@dataclass
class ScenarioEvent:
    at: int
    action: str  # remove_node | reset_energy
    node: Optional[int] = None
    label: Optional[str] = None


@dataclass
class Scenario:
    nodes: list[NodeSpec]
    name: str = "scenario"
    seed: int = 1
    duration_ms: int = 480_000
    app_period_ms: int = 1000
    tx_range_m: float = 50.0
    interference_range_m: float = 50.0
    hopping_sequence: list[int] = field(default_factory=lambda: list(DEFAULT_HOPPING_CHANNELS))
    scheduler: str = "both"  # orchestra | minimal | both
    events: list[ScenarioEvent] = field(default_factory=list)
    trickle: dict = field(default_factory=dict)  # i_min_ms / doublings / k overrides
    orchestra: dict = field(default_factory=dict)
    minimal: dict = field(default_factory=dict)

    # -- scheduler parameter plumbing ---------------------------------------

    def orchestra_config(self) -> OrchestraConfig:
        p = dict(self.orchestra)
        kind = RuleKind(p.pop("unicast_kind", "rbs"))
        unicast_length = p.pop("unicast_length", 17)
        cs_length = p.pop("cs_length", 31)
        beacon_length = p.pop("beacon_length", 397)
        if p:
            raise ConfigError(f"unknown orchestra parameters: {sorted(p)}")
        return OrchestraConfig(
            beacon=OrchestraRule(RuleKind.SBD, beacon_length, 0, 2, TrafficClass.BEACON),
            rpl_signaling=OrchestraRule(
                RuleKind.CS, cs_length, 1, 1, TrafficClass.RPL_SIGNALING
            ),
            application=OrchestraRule(kind, unicast_length, 2, 0, TrafficClass.APPLICATION),
        )

    def minimal_config(self) -> MinimalConfig:
        p = dict(self.minimal)
        length = p.pop("length", 7)
        if p:
            raise ConfigError(f"unknown minimal parameters: {sorted(p)}")
        return MinimalConfig(length=length)

    # -- validation ------------------------------------------------------------

    def validate(self) -> "Scenario":
        ids = [n.node_id for n in self.nodes]
        if not ids:
            raise ConfigError("scenario has no nodes")
        if len(set(ids)) != len(ids):
            raise ConfigError("node ids must be unique")
        roots = [n for n in self.nodes if n.role == "root"]
        if len(roots) != 1:
            raise ConfigError(f"scenario needs exactly one root, found {len(roots)}")
        for n in self.nodes:
            if n.role not in ("root", "sender", "receiver"):
                raise ConfigError(f"node {n.node_id}: unknown role {n.role!r}")
            if not all(math.isfinite(c) for c in n.position):
                raise ConfigError(f"node {n.node_id}: position must be finite")
        if self.duration_ms <= 0:
            raise ConfigError("duration_ms must be positive")
        if self.app_period_ms <= 0:
            raise ConfigError("app_period_ms must be positive")
        if self.tx_range_m <= 0 or self.interference_range_m <= 0:
            raise ConfigError("radio ranges must be positive")
        if self.tx_range_m > self.interference_range_m:
            raise ConfigError("tx_range_m must not exceed interference_range_m")
        if len(set(self.hopping_sequence)) != len(self.hopping_sequence) or not self.hopping_sequence:
            raise ConfigError("hopping_sequence must be non-empty with distinct channels")
        if self.scheduler not in SCHEDULERS + ("both",):
            raise ConfigError(f"scheduler must be one of {SCHEDULERS + ('both',)}")
        known_ids = set(ids)
        for ev in self.events:
            if not 0 <= ev.at <= self.duration_ms:
                raise ConfigError(f"event at t={ev.at} outside run duration")
            if ev.action == "remove_node":
                if ev.node not in known_ids:
                    raise ConfigError(f"remove_node targets unknown node {ev.node}")
            elif ev.action == "reset_energy":
                pass
            else:
                raise ConfigError(f"unknown event action {ev.action!r}")
        for key in self.trickle:
            if key not in ("i_min_ms", "doublings", "k"):
                raise ConfigError(f"unknown trickle parameter {key!r}")
        self.orchestra_config()
        self.minimal_config()
        return self

    # -- (de)serialization --------------------------------------------------------

    @classmethod
    def from_dict(cls, raw: dict) -> "Scenario":
        try:
            nodes = [
                NodeSpec(int(n["id"]), (float(n["position"][0]), float(n["position"][1])),
                         n.get("role", "receiver"))
                for n in raw["nodes"]
            ]
            events = [
                ScenarioEvent(int(e["at"]), e["action"], e.get("node"), e.get("label"))
                for e in raw.get("events", [])
            ]
        except (KeyError, TypeError, IndexError) as exc:
            raise ConfigError(f"malformed scenario document: {exc}") from exc
        known = {f for f in cls.__dataclass_fields__} - {"nodes", "events"}
        extra = {k for k in raw} - known - {"nodes", "events"}
        if extra:
            raise ConfigError(f"unknown scenario fields: {sorted(extra)}")
        kwargs = {k: raw[k] for k in known if k in raw}
        return cls(nodes=nodes, events=events, **kwargs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nodes"] = [
            {"id": n.node_id, "position": list(n.position), "role": n.role}
            for n in self.nodes
        ]
        d["events"] = [
            {k: v for k, v in {"at": e.at, "action": e.action, "node": e.node,
                               "label": e.label}.items() if v is not None}
            for e in self.events
        ]
        return d

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"scenario is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read()).validate()


def paper_scenario() -> Scenario:
    """The bundled experiment: remove node 10 at minute 3, measure to minute 7."""
    text = resources.files("tschsim.data").joinpath("paper.json").read_text("utf-8")
    return Scenario.from_json(text).validate()
