"""Whole-network simulation: composes the kernel, radio medium, per-node
TSCH MAC + RPL stacks, a scheduler, and the energy ledger, and executes
the scenario's timed events.

One simulation instance is single-threaded and fully deterministic for a
given (scenario, scheduler, seed) triple; independent instances share no
state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from .energy import EnergyLedger
from .kernel import Kernel, RngStreams
from .mac import (
    BROADCAST,
    Frame,
    FrameKind,
    HoppingSequence,
    SLOT_DURATION_TICKS,
    SlotIntent,
    TschMac,
)
from .medium import Position, RadioMedium, Transmission
from .rpl import (
    DioMessage,
    HOUSEKEEPING_PERIOD_MS,
    RANK_INCREMENT,
    ROUTELESS_METRIC,
    RplNode,
    TrickleConfig,
)
from .scheduling import MinimalSchedule, NodeSchedule, OrchestraSchedule

logger = logging.getLogger(__name__)

EB_PERIOD_MS = 3970  # minimal-schedule beacon pacing; one per beacon-slotframe cycle


@dataclass
class SimNode:
    node_id: int
    position: Position
    role: str
    mac: TschMac
    rpl: RplNode
    schedule: Optional[NodeSchedule] = None
    alive: bool = True
    app_seq: int = 0
    app_drops: int = 0


@dataclass
class TraceLog:
    """In-memory run traces; written out as CSV/log files by the experiment runner."""

    events: list[tuple[int, int, str, str]] = field(default_factory=list)
    trickle: list[tuple[int, int, int]] = field(default_factory=list)
    dio: list[tuple[int, int, int]] = field(default_factory=list)
    inconsistencies: list[tuple[int, int, str]] = field(default_factory=list)
    deliveries: list[tuple[int, int, int]] = field(default_factory=list)  # t, origin, seq
    cell_changes: list[tuple[int, int, str, str]] = field(default_factory=list)
    removals: list[tuple[int, int]] = field(default_factory=list)

    def event(self, t: int, node: int, kind: str, detail: str = "") -> None:
        self.events.append((t, node, kind, detail))


class Simulation:
    def __init__(self, scenario, scheduler: str, seed: Optional[int] = None):
        from .scenario import Scenario  # local import to avoid a cycle

        assert isinstance(scenario, Scenario)
        self.scenario = scenario
        self.scheduler_name = scheduler
        self.seed = scenario.seed if seed is None else seed
        self.kernel = Kernel()
        self.rngs = RngStreams(self.seed)
        self.hopping = HoppingSequence(tuple(scenario.hopping_sequence))
        self.trickle_config = TrickleConfig(**scenario.trickle)
        self.medium = RadioMedium(
            {n.node_id: Position(*n.position) for n in scenario.nodes},
            tx_range=scenario.tx_range_m,
            interference_range=scenario.interference_range_m,
        )
        self.ledger = EnergyLedger([n.node_id for n in scenario.nodes])
        self.trace = TraceLog()
        self.negotiation_frames = 0  # autonomous scheduling: must stay zero
        self.nodes: dict[int, SimNode] = {}
        self._node_order: list[int] = []
        root_id = next(n.node_id for n in scenario.nodes if n.role == "root")

        for spec in sorted(scenario.nodes, key=lambda n: n.node_id):
            nid = spec.node_id
            rng = self.rngs.for_node(nid)
            mac = TschMac(nid, self.hopping, rng, is_coordinator=(nid == root_id))
            rpl = RplNode(
                nid, self.kernel, rng, self.trickle_config, is_root=(nid == root_id)
            )
            node = SimNode(nid, Position(*spec.position), spec.role, mac, rpl)
            self.nodes[nid] = node
            self._node_order.append(nid)
            self._wire(node)

        root = self.nodes[root_id]
        self._install_schedule(root)
        root.rpl.start_root()
        self.trace.event(0, root_id, "joined", "coordinator")

        for nid, node in self.nodes.items():
            if node.role == "sender":
                self._schedule_app(node, self.scenario.app_period_ms)
        for ev in scenario.events:
            if ev.action == "remove_node":
                self.kernel.schedule(ev.at, self._make_removal(ev.node), target=ev.node)
            elif ev.action == "reset_energy":
                self.kernel.schedule(ev.at, self._make_energy_reset(ev.label))
        self.kernel.schedule(0, lambda: self._slot(0))
        self.kernel.schedule(HOUSEKEEPING_PERIOD_MS, self._housekeeping)

    # -- wiring ---------------------------------------------------------------

    def _wire(self, node: SimNode) -> None:
        nid = node.node_id
        mac, rpl = node.mac, node.rpl

        mac.on_joined = lambda sender, asn, n=node: self._on_mac_joined(n, sender, asn)
        mac.on_frame_rx = lambda frame, asn, n=node: self._on_frame_rx(n, frame, asn)
        mac.on_ack = lambda peer, frame, n=node: rpl.heard_from(peer, self.kernel.now)
        mac.on_ack_missed = lambda peer, frame, dropped, n=node: self._on_ack_missed(
            n, peer, frame, dropped
        )
        mac.make_eb = lambda n=node: self._make_eb(n)

        rpl.send_dio = lambda dio, n=node: self._send_dio(n, dio)
        rpl.send_probe = lambda nbr, n=node: self._send_probe(n, nbr)
        rpl.on_parent_change = lambda old, new, n=node: self._on_parent_change(n, old, new)
        rpl.on_neighbor_added = lambda nbr, n=node: self._on_neighbor_added(n, nbr)
        rpl.on_neighbor_removed = lambda nbr, n=node: self._on_neighbor_removed(n, nbr)
        rpl.on_inconsistency = lambda cause, n=node: self._on_inconsistency(n, cause)
        rpl.log = lambda event, detail, n=node: self._on_rpl_log(n, event, detail)
        rpl.trickle.on_interval_change = lambda i_ms, n=node: self._on_interval_change(
            n, i_ms
        )

    def _install_schedule(self, node: SimNode) -> None:
        hook = lambda change, handle, nbr, cause, n=node: self._on_cell_change(
            n, change, handle, nbr, cause
        )
        if self.scheduler_name == "orchestra":
            node.schedule = OrchestraSchedule(
                node.mac,
                self.scenario.orchestra_config(),
                network_size_hint=len(self.nodes),
                on_cell_change=hook,
                warn=lambda msg: logger.warning("node %s: %s", node.node_id, msg),
            )
        elif self.scheduler_name == "minimal":
            node.schedule = MinimalSchedule(
                node.mac, self.scenario.minimal_config(), on_cell_change=hook
            )
            self._schedule_eb_timer(node)
        else:
            raise ValueError(f"unknown scheduler {self.scheduler_name!r}")

    # -- node callbacks ---------------------------------------------------------

    def _on_mac_joined(self, node: SimNode, sender: int, asn: int) -> None:
        self.trace.event(self.kernel.now, node.node_id, "joined", f"via={sender}")
        self._install_schedule(node)
        node.rpl.heard_from(sender, self.kernel.now)

    def _on_frame_rx(self, node: SimNode, frame: Frame, asn: int) -> None:
        now = self.kernel.now
        if not node.mac.joined:
            return  # only EBs matter before joining; TschMac handled those
        node.rpl.heard_from(frame.src, now)
        if frame.dst not in (node.node_id, BROADCAST):
            return  # overheard traffic refreshes liveness only
        if frame.kind is FrameKind.DIO:
            node.rpl.process_dio(
                DioMessage(frame.src, frame.payload["rank"], frame.payload["version"]), now
            )
        elif frame.kind is FrameKind.DATA:
            self._on_data(node, frame, now)
        elif frame.kind is FrameKind.EB:
            if frame.payload.get("join_metric", 0) >= ROUTELESS_METRIC:
                node.rpl.heard_routeless_beacon(frame.src, now)
        # PROBE needs no payload handling beyond liveness

    def _on_data(self, node: SimNode, frame: Frame, now: int) -> None:
        origin = frame.payload["origin"]
        seq = frame.payload["seq"]
        node.rpl.data_from_child(frame.src, now)
        if node.rpl.is_root:
            self.trace.deliveries.append((now, origin, seq))
            self.trace.event(now, node.node_id, "rx", f"data origin={origin} seq={seq}")
            return
        if node.rpl.dodag.parent is None:
            node.app_drops += 1
            self.trace.event(now, node.node_id, "drop", f"forward origin={origin} no_parent")
            return
        fwd = Frame(
            FrameKind.DATA,
            node.node_id,
            node.rpl.dodag.parent,
            {"origin": origin, "seq": seq},
        )
        if not node.mac.enqueue(fwd):
            self.trace.event(now, node.node_id, "drop", f"forward origin={origin} queue_full")

    def _on_ack_missed(self, node: SimNode, peer: int, frame: Frame, dropped: bool) -> None:
        if dropped:
            self.trace.event(
                self.kernel.now, node.node_id, "drop",
                f"{frame.kind.value} to={peer} retries_exhausted",
            )
        node.rpl.ack_missed(peer, self.kernel.now)

    def _make_eb(self, node: SimNode) -> Frame:
        if node.rpl.is_root:
            metric = 0
        elif not node.rpl.has_route():
            metric = ROUTELESS_METRIC
        else:
            metric = max(node.rpl.dodag.rank // RANK_INCREMENT - 1, 0)
        return Frame(
            FrameKind.EB, node.node_id, BROADCAST, {"join_metric": metric}, needs_ack=False
        )

    def _send_dio(self, node: SimNode, dio: DioMessage) -> None:
        frame = Frame(
            FrameKind.DIO, node.node_id, BROADCAST,
            {"rank": dio.rank, "version": dio.version},
        )
        node.mac.enqueue(frame)

    def _send_probe(self, node: SimNode, neighbor: int) -> None:
        node.mac.enqueue(Frame(FrameKind.PROBE, node.node_id, neighbor))

    def _on_parent_change(self, node: SimNode, old, new) -> None:
        if node.schedule is None:
            return
        if new is not None:
            node.schedule.neighbor_added(new, cause="parent")
            node.mac.time_source = new
            node.schedule.time_source_changed(new)

    def _on_neighbor_added(self, node: SimNode, nbr: int) -> None:
        if node.schedule is not None:
            node.schedule.neighbor_added(nbr)

    def _on_neighbor_removed(self, node: SimNode, nbr: int) -> None:
        if node.schedule is not None:
            node.schedule.neighbor_removed(nbr)
        node.mac.queue.drop_all_for(nbr)

    def _on_inconsistency(self, node: SimNode, cause: str) -> None:
        self.trace.inconsistencies.append((self.kernel.now, node.node_id, cause))
        self.trace.event(self.kernel.now, node.node_id, "inconsistency", cause)

    def _on_rpl_log(self, node: SimNode, event: str, detail: dict) -> None:
        t = self.kernel.now
        if event == "dio_triggered":
            self.trace.dio.append((t, node.node_id, detail["n"]))
        text = " ".join(f"{k}={v}" for k, v in detail.items())
        self.trace.event(t, node.node_id, event, text)

    def _on_interval_change(self, node: SimNode, i_ms: int) -> None:
        self.trace.trickle.append((self.kernel.now, node.node_id, i_ms))
        self.trace.event(self.kernel.now, node.node_id, "trickle_interval", str(i_ms))

    def _on_cell_change(self, node: SimNode, change: str, handle: int, nbr, cause: str) -> None:
        self.trace.cell_changes.append(
            (self.kernel.now, node.node_id, change, f"sf={handle} nbr={nbr} cause={cause}")
        )

    # -- timers -----------------------------------------------------------------

    def _schedule_app(self, node: SimNode, period: int) -> None:
        def tick():
            if node.alive:
                self._app_generate(node)
                self.kernel.schedule(self.kernel.now + period, tick, target=node.node_id)

        self.kernel.schedule(period, tick, target=node.node_id)

    def _app_generate(self, node: SimNode) -> None:
        node.app_seq += 1
        if not node.mac.joined or not node.rpl.has_route():
            node.app_drops += 1
            self.trace.event(
                self.kernel.now, node.node_id, "drop", f"app seq={node.app_seq} no_parent"
            )
            return
        frame = Frame(
            FrameKind.DATA,
            node.node_id,
            node.rpl.dodag.parent,
            {"origin": node.node_id, "seq": node.app_seq},
        )
        if not node.mac.enqueue(frame):
            self.trace.event(
                self.kernel.now, node.node_id, "drop", f"app seq={node.app_seq} queue_full"
            )

    def _schedule_eb_timer(self, node: SimNode) -> None:
        period = EB_PERIOD_MS
        first = self.kernel.now + 1 + int(node.mac.rng.random() * period)

        def tick():
            if node.alive and node.mac.joined:
                node.mac.enqueue(self._make_eb(node))
            if node.alive:
                self.kernel.schedule(self.kernel.now + period, tick, target=node.node_id)

        self.kernel.schedule(first, tick, target=node.node_id)

    def _housekeeping(self) -> None:
        now = self.kernel.now
        for nid in self._node_order:
            node = self.nodes[nid]
            if node.alive:
                node.rpl.housekeeping(now)
        if now < self.scenario.duration_ms:
            self.kernel.schedule(now + HOUSEKEEPING_PERIOD_MS, self._housekeeping)

    # -- scenario events ----------------------------------------------------------

    def _make_removal(self, node_id: int):
        def apply():
            node = self.nodes[node_id]
            node.alive = False
            node.rpl.trickle.stop()
            self.medium.remove_node(node_id)
            self.trace.removals.append((self.kernel.now, node_id))
            self.trace.event(self.kernel.now, node_id, "removed", "")

        return apply

    def _make_energy_reset(self, label: Optional[str]):
        def apply():
            self.ledger.reset(self.kernel.now, label)
            self.trace.event(self.kernel.now, -1, "energy_reset", label or "")

        return apply

    # -- the slot loop --------------------------------------------------------------

    def _slot(self, asn: int) -> None:
        t = asn * SLOT_DURATION_TICKS
        intents: list[tuple[int, SlotIntent]] = []
        for nid in self._node_order:
            node = self.nodes[nid]
            if not node.alive:
                continue
            intents.append((nid, node.mac.decide_slot(asn)))

        by_channel: dict[int, list[Transmission]] = {}
        for nid, intent in intents:
            if intent.action == "tx":
                by_channel.setdefault(intent.channel, []).append(
                    Transmission(nid, intent.channel, intent.frame)
                )

        delivered: dict[int, Optional[Transmission]] = {}
        for nid, intent in intents:
            if intent.action != "rx":
                continue
            tx_set = by_channel.get(intent.channel, [])
            got = self.medium.deliver(tx_set, nid)
            delivered[nid] = got
            if got is None and len(tx_set) >= 2:
                pos = self.medium.positions[nid]
                audible = [
                    tx.sender
                    for tx in tx_set
                    if pos.distance_to(self.medium.positions[tx.sender])
                    <= self.medium.interference_range
                ]
                if len(audible) >= 2:
                    self.trace.event(t, nid, "collision", f"senders={audible}")

        for nid, intent in intents:
            node = self.nodes[nid]
            if intent.action == "tx":
                frame = intent.frame
                acked = False
                if frame.dst != BROADCAST:
                    got = delivered.get(frame.dst)
                    acked = got is not None and got.sender == nid
                outcome = node.mac.complete_tx(intent, acked)
                kind = frame.kind.value
                self.trace.event(t, nid, "tx" if outcome == "tx_ok" else "tx_fail",
                                 f"{kind} to={frame.dst}")
                if frame.kind is FrameKind.EB:
                    self.trace.event(t, nid, "eb", "")
            elif intent.action == "rx":
                got = delivered.get(nid)
                outcome = node.mac.complete_rx(got.frame if got else None, asn)
                if outcome == "rx_ok" and got.frame.kind is not FrameKind.DATA:
                    self.trace.event(t, nid, "rx", f"{got.frame.kind.value} from={got.sender}")
            if intent.action in ("tx", "rx"):
                self.ledger.record(nid, "on", t)
                self.ledger.record(nid, "off", t + SLOT_DURATION_TICKS)

        # a slot must fit inside the run: the last one starts at duration - 10
        next_t = t + SLOT_DURATION_TICKS
        if next_t < self.scenario.duration_ms:
            self.kernel.schedule(next_t, lambda: self._slot(asn + 1))

    # -- execution --------------------------------------------------------------------

    def run(self) -> None:
        self.kernel.run_until(self.scenario.duration_ms)
        if self.ledger.window_start < self.scenario.duration_ms:
            self.ledger.reset(self.scenario.duration_ms)  # close the final window

    def alive_ids(self) -> set[int]:
        return {nid for nid, n in self.nodes.items() if n.alive}
