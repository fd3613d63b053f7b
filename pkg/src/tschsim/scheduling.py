"""Slotframe builders: Orchestra's autonomous rules and the 6TiSCH-minimal
single-shared-slot baseline.

Every cell position is derived locally from node identity (the identity
hash is the node id itself), so schedule changes never require a single
frame of negotiation traffic. Routing-layer neighbor changes arrive via
`neighbor_added` / `neighbor_removed` hooks and only touch cells keyed on
that neighbor's id.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .mac import (
    BROADCAST,
    Cell,
    CellOption,
    Slotframe,
    TschMac,
    TRAFFIC_ANY,
    TRAFFIC_BEACON,
    TRAFFIC_RPL,
    TRAFFIC_UNICAST,
)


class RuleKind(enum.Enum):
    CS = "cs"    # common shared
    RBS = "rbs"  # receiver-based shared
    SBS = "sbs"  # sender-based shared
    SBD = "sbd"  # sender-based dedicated


class TrafficClass(enum.Enum):
    BEACON = "beacon"
    RPL_SIGNALING = "rpl_signaling"
    APPLICATION = "application"


def slot_of(node_id: int, length: int) -> int:
    """Slot offset a node's identity hashes to; the hash is the id itself."""
    if length < 1:
        raise ValueError("slotframe length must be >= 1")
    return node_id % length


@dataclass(frozen=True)
class OrchestraRule:
    kind: RuleKind
    length: int
    channel_offset: int
    priority: int
    traffic: TrafficClass


@dataclass(frozen=True)
class OrchestraConfig:
    """Default three-rule schedule: beacons, RPL signaling, application unicast."""

    beacon: OrchestraRule = OrchestraRule(RuleKind.SBD, 397, 0, 2, TrafficClass.BEACON)
    rpl_signaling: OrchestraRule = OrchestraRule(RuleKind.CS, 31, 1, 1, TrafficClass.RPL_SIGNALING)
    application: OrchestraRule = OrchestraRule(RuleKind.RBS, 17, 2, 0, TrafficClass.APPLICATION)

    def rules(self) -> tuple[OrchestraRule, ...]:
        return (self.application, self.rpl_signaling, self.beacon)

    def __post_init__(self):
        lengths = [r.length for r in self.rules()]
        for i, a in enumerate(lengths):
            for b in lengths[i + 1 :]:
                if math.gcd(a, b) != 1:
                    raise ValueError(
                        f"slotframe lengths must be pairwise coprime, got {a} and {b}"
                    )
        priorities = [r.priority for r in self.rules()]
        if len(set(priorities)) != len(priorities):
            raise ValueError("rule priorities must be unique")


@dataclass(frozen=True)
class MinimalConfig:
    """Single shared slot for all transmissions and receptions in a slotframe."""

    length: int = 7
    channel_offset: int = 0


# Slotframe handles, stable across schedulers for log readability.
HANDLE_UNICAST = 0
HANDLE_RPL = 1
HANDLE_BEACON = 2
HANDLE_MINIMAL = 0

CellChangeHook = Callable[[str, int, Optional[int], str], None]
# (change ∈ add/remove, slotframe handle, neighbor or None, cause)


class NodeSchedule:
    """Base class: owns a node's installed slotframes and cell bookkeeping."""

    def __init__(self, mac: TschMac, on_cell_change: Optional[CellChangeHook] = None):
        self.mac = mac
        self.node_id = mac.node_id
        self._on_cell_change = on_cell_change or (lambda *a: None)
        self._neighbor_cells: dict[int, list[tuple[Slotframe, Cell]]] = {}

    def _add_cell(self, sf: Slotframe, cell: Cell, neighbor: Optional[int], cause: str):
        sf.add(cell)
        if neighbor is not None:
            self._neighbor_cells.setdefault(neighbor, []).append((sf, cell))
        self._on_cell_change("add", sf.handle, neighbor, cause)

    def _drop_neighbor_cells(self, neighbor: int, cause: str) -> int:
        entries = self._neighbor_cells.pop(neighbor, [])
        for sf, cell in entries:
            sf.remove(cell)
            self._on_cell_change("remove", sf.handle, neighbor, cause)
        return len(entries)

    # Routing-layer hooks; no-ops unless a rule keys cells on neighbors.
    def neighbor_added(self, neighbor: int, cause: str = "neighbor_add") -> None:
        pass

    def neighbor_removed(self, neighbor: int, cause: str = "neighbor_remove") -> None:
        pass

    def time_source_changed(self, new_source: Optional[int]) -> None:
        pass


class OrchestraSchedule(NodeSchedule):
    """Installs the Orchestra rule set on one node and maintains it autonomously."""

    def __init__(
        self,
        mac: TschMac,
        config: OrchestraConfig,
        network_size_hint: int = 0,
        on_cell_change: Optional[CellChangeHook] = None,
        warn: Callable[[str], None] = lambda msg: None,
    ):
        super().__init__(mac, on_cell_change)
        self.config = config
        self._warn = warn
        self._network_size_hint = network_size_hint
        self._unicast_sf: Optional[Slotframe] = None
        self._beacon_sf: Optional[Slotframe] = None
        self._beacon_rx: Optional[Cell] = None
        self._neighbors: set[int] = set()
        self.install()

    def install(self) -> None:
        cfg = self.config

        rule = cfg.rpl_signaling
        if rule.kind is not RuleKind.CS:
            raise ValueError("the RPL signaling rule must be common-shared")
        sf = Slotframe(HANDLE_RPL, rule.length, rule.priority)
        # anchor id 0: the same broadcast cell at every node
        sf.add(
            Cell(
                slot_of(0, rule.length),
                rule.channel_offset,
                CellOption.TX | CellOption.RX | CellOption.SHARED,
                BROADCAST,
                TRAFFIC_RPL,
            )
        )
        self.mac.install_slotframe(sf)
        self._on_cell_change("add", sf.handle, None, "install")

        rule = cfg.beacon
        sf = Slotframe(HANDLE_BEACON, rule.length, rule.priority)
        # Beacon cells hash on id+1: hashing on the bare id would park every
        # node's first beacon in the same slot as its own unicast Rx cell
        # (both are id mod length), and the higher-priority unicast rule
        # would shadow the very first beacon of each slotframe cycle.
        sf.add(
            Cell(
                slot_of(self.node_id + 1, rule.length),
                rule.channel_offset,
                CellOption.TX,
                BROADCAST,
                TRAFFIC_BEACON,
                autogen_eb=True,
            )
        )
        self.mac.install_slotframe(sf)
        self._beacon_sf = sf
        self._on_cell_change("add", sf.handle, None, "install")
        self.time_source_changed(self.mac.time_source)

        rule = cfg.application
        if rule.kind is RuleKind.CS:
            raise ValueError("the application rule must be neighbor-keyed (RBS/SBS/SBD)")
        if rule.kind is RuleKind.SBD and 0 < rule.length < self._network_size_hint:
            self._warn(
                f"SBD slotframe length {rule.length} below network size "
                f"{self._network_size_hint}: dedicated slots may collide"
            )
        sf = Slotframe(HANDLE_UNICAST, rule.length, rule.priority)
        self._unicast_sf = sf
        if rule.kind is RuleKind.RBS:
            own = Cell(
                slot_of(self.node_id, rule.length),
                rule.channel_offset,
                CellOption.RX,
                BROADCAST,
                TRAFFIC_UNICAST,
            )
        elif rule.kind is RuleKind.SBS:
            own = Cell(
                slot_of(self.node_id, rule.length),
                rule.channel_offset,
                CellOption.TX | CellOption.SHARED,
                BROADCAST,
                TRAFFIC_UNICAST,
            )
        else:  # SBD: dedicated transmit slot owned by this sender alone
            own = Cell(
                slot_of(self.node_id, rule.length),
                rule.channel_offset,
                CellOption.TX,
                BROADCAST,
                TRAFFIC_UNICAST,
            )
        sf.add(own)
        self.mac.install_slotframe(sf)
        self._on_cell_change("add", sf.handle, None, "install")

    def neighbor_added(self, neighbor: int, cause: str = "neighbor_add") -> None:
        if neighbor in self._neighbors or neighbor == self.node_id:
            return
        self._neighbors.add(neighbor)
        rule = self.config.application
        sf = self._unicast_sf
        offset = slot_of(neighbor, rule.length)
        if rule.kind is RuleKind.RBS:
            cell = Cell(
                offset, rule.channel_offset,
                CellOption.TX | CellOption.SHARED, neighbor, TRAFFIC_UNICAST,
            )
        else:  # SBS and SBD listen in each neighbor's own slot
            cell = Cell(offset, rule.channel_offset, CellOption.RX, neighbor, TRAFFIC_UNICAST)
        self._add_cell(sf, cell, neighbor, cause)

    def neighbor_removed(self, neighbor: int, cause: str = "neighbor_remove") -> None:
        if neighbor not in self._neighbors:
            return
        self._neighbors.discard(neighbor)
        self._drop_neighbor_cells(neighbor, cause)

    def time_source_changed(self, new_source: Optional[int]) -> None:
        rule = self.config.beacon
        sf = self._beacon_sf
        if self._beacon_rx is not None:
            sf.remove(self._beacon_rx)
            self._on_cell_change("remove", sf.handle, self._beacon_rx.peer, "time_source")
            self._beacon_rx = None
        if new_source is not None:
            cell = Cell(
                slot_of(new_source + 1, rule.length),
                rule.channel_offset,
                CellOption.RX,
                new_source,
                TRAFFIC_BEACON,
            )
            sf.add(cell)
            self._beacon_rx = cell
            self._on_cell_change("add", sf.handle, new_source, "time_source")


class MinimalSchedule(NodeSchedule):
    """6TiSCH-minimal: one shared broadcast cell carries every kind of traffic."""

    def __init__(
        self,
        mac: TschMac,
        config: MinimalConfig,
        on_cell_change: Optional[CellChangeHook] = None,
    ):
        super().__init__(mac, on_cell_change)
        self.config = config
        sf = Slotframe(HANDLE_MINIMAL, config.length, priority=0)
        sf.add(
            Cell(
                0,
                config.channel_offset,
                CellOption.TX | CellOption.RX | CellOption.SHARED,
                BROADCAST,
                TRAFFIC_ANY,
            )
        )
        mac.install_slotframe(sf)
        self._on_cell_change("add", sf.handle, None, "install")
