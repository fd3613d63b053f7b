"""TSCH MAC layer: channel hopping, slotframes and cells, per-peer queues,
shared-slot backoff, retransmission, and beacon-based joining.

All nodes share slot boundaries and the global ASN (perfect-sync model);
joining only fixes a node's notion of the ASN value and its time source.
One timeslot is atomic: it yields exactly one of {tx_ok, tx_fail, rx_ok,
idle_listen, sleep} per node.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

BROADCAST = -1

# Paper's 16-entry hopping vector (the Eq. 1 worked example).
DEFAULT_HOPPING_CHANNELS = (16, 17, 23, 18, 26, 15, 25, 22, 19, 11, 12, 13, 24, 14, 20, 21)

SLOT_DURATION_TICKS = 10  # ~10 ms timeslots at 1 ms per tick

MAX_RETRIES = 8
QUEUE_CAPACITY_PER_PEER = 8
BACKOFF_MIN_BE = 1
BACKOFF_MAX_BE = 5


class HoppingError(ValueError):
    """Channel offset outside the hopping sequence."""


@dataclass(frozen=True)
class HoppingSequence:
    """The channel vector V and its length N_ch."""

    channels: tuple[int, ...] = DEFAULT_HOPPING_CHANNELS

    def __post_init__(self):
        if len(set(self.channels)) != len(self.channels):
            raise ValueError("hopping sequence entries must be distinct")
        if not self.channels:
            raise ValueError("hopping sequence must not be empty")

    @property
    def n_ch(self) -> int:
        return len(self.channels)


def channel_for(asn: int, channel_offset: int, seq: HoppingSequence) -> int:
    """Physical channel for a slot: V[(ASN + chOf) mod N_ch], zero-based."""
    if not 0 <= channel_offset < seq.n_ch:
        raise HoppingError(
            f"channel offset {channel_offset} out of range [0, {seq.n_ch})"
        )
    return seq.channels[(asn + channel_offset) % seq.n_ch]


class CellOption(enum.Flag):
    TX = enum.auto()
    RX = enum.auto()
    SHARED = enum.auto()


class FrameKind(enum.Enum):
    EB = "eb"
    DIO = "dio"
    DATA = "data"
    PROBE = "probe"


# Frame kinds a cell may carry, per traffic class.
TRAFFIC_BEACON = frozenset({FrameKind.EB})
TRAFFIC_RPL = frozenset({FrameKind.DIO})
TRAFFIC_UNICAST = frozenset({FrameKind.DATA, FrameKind.PROBE})
TRAFFIC_ANY = frozenset(FrameKind)


@dataclass
class Frame:
    kind: FrameKind
    src: int
    dst: int  # node id or BROADCAST
    payload: dict = field(default_factory=dict)
    needs_ack: bool = True

    def __post_init__(self):
        if self.dst == BROADCAST:
            self.needs_ack = False


@dataclass(frozen=True)
class Cell:
    """One (slot offset, channel offset) position in a slotframe."""

    slot_offset: int
    channel_offset: int
    options: CellOption
    peer: int  # neighbor id or BROADCAST
    traffic: frozenset = TRAFFIC_ANY
    autogen_eb: bool = False  # cell synthesizes an EB instead of draining a queue


@dataclass
class Slotframe:
    handle: int
    length: int
    priority: int  # lower value wins on overlap
    cells: dict[int, list[Cell]] = field(default_factory=dict)

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("slotframe length must be >= 1")

    def add(self, cell: Cell) -> None:
        if not 0 <= cell.slot_offset < self.length:
            raise ValueError(
                f"cell slot offset {cell.slot_offset} outside slotframe length {self.length}"
            )
        slot = self.cells.setdefault(cell.slot_offset, [])
        if cell not in slot:
            slot.append(cell)

    def remove(self, cell: Cell) -> None:
        slot = self.cells.get(cell.slot_offset)
        if slot and cell in slot:
            slot.remove(cell)
            if not slot:
                del self.cells[cell.slot_offset]

    def active_cells(self, asn: int) -> list[Cell]:
        return self.cells.get(asn % self.length, [])


@dataclass
class QueuedFrame:
    frame: Frame
    enqueue_seq: int
    retries: int = 0
    backoff_exponent: int = BACKOFF_MIN_BE
    backoff_skip: int = 0


@dataclass
class QueueCounters:
    """Queue conservation bookkeeping: enqueued = delivered + dropped + queued."""

    enqueued: int = 0
    delivered: int = 0
    dropped: int = 0


class TxQueue:
    """Per-peer FIFO frame queues with bounded capacity and retry state."""

    def __init__(self, capacity: int = QUEUE_CAPACITY_PER_PEER) -> None:
        self.capacity = capacity
        self._queues: dict[int, deque[QueuedFrame]] = {}
        self._seq = 0
        self.counters = QueueCounters()

    def enqueue(self, frame: Frame) -> bool:
        q = self._queues.setdefault(frame.dst, deque())
        if len(q) >= self.capacity:
            self.counters.dropped += 1
            self.counters.enqueued += 1
            return False
        self._seq += 1
        q.append(QueuedFrame(frame, self._seq))
        self.counters.enqueued += 1
        return True

    def head(self, peer: int) -> Optional[QueuedFrame]:
        q = self._queues.get(peer)
        return q[0] if q else None

    def heads_matching(self, kinds: frozenset, peers: Iterable[int]) -> list[QueuedFrame]:
        out = []
        for peer in peers:
            qf = self.head(peer)
            if qf is not None and qf.frame.kind in kinds:
                out.append(qf)
        return out

    def pop_delivered(self, peer: int) -> QueuedFrame:
        qf = self._queues[peer].popleft()
        self.counters.delivered += 1
        return qf

    def pop_dropped(self, peer: int) -> QueuedFrame:
        qf = self._queues[peer].popleft()
        self.counters.dropped += 1
        return qf

    def drop_all_for(self, peer: int) -> int:
        q = self._queues.get(peer)
        n = len(q) if q else 0
        if q:
            q.clear()
        self.counters.dropped += n
        return n

    def pending(self) -> int:
        return sum(len(q) for q in self._queues.values())

    def peers_with_traffic(self) -> list[int]:
        return sorted(p for p, q in self._queues.items() if q)


@dataclass
class SlotIntent:
    """What a node's radio will do in one timeslot."""

    action: str  # "tx" | "rx" | "sleep"
    channel: int = -1
    cell: Optional[Cell] = None
    queued: Optional[QueuedFrame] = None
    frame: Optional[Frame] = None  # the frame on air for tx intents


class TschMac:
    """Per-node TSCH state machine, driven by the simulation's slot loop.

    The owning simulation supplies the RNG substream plus callbacks; the
    MAC holds no references to the medium or other nodes.
    """

    def __init__(
        self,
        node_id: int,
        hopping: HoppingSequence,
        rng,
        is_coordinator: bool = False,
    ) -> None:
        self.node_id = node_id
        self.hopping = hopping
        self.rng = rng
        self.is_coordinator = is_coordinator
        self.joined = is_coordinator
        self.time_source: Optional[int] = None
        self.join_asn: Optional[int] = 0 if is_coordinator else None
        self.slotframes: list[Slotframe] = []
        self.queue = TxQueue()
        # callbacks wired by the simulation
        self.on_joined: Callable[[int, int], None] = lambda sender, asn: None
        self.on_frame_rx: Callable[[Frame, int], None] = lambda frame, asn: None
        self.on_ack: Callable[[int, Frame], None] = lambda peer, frame: None
        self.on_ack_missed: Callable[[int, Frame, bool], None] = (
            lambda peer, frame, dropped: None
        )
        self.make_eb: Callable[[], Frame] = lambda: Frame(
            FrameKind.EB, self.node_id, BROADCAST, needs_ack=False
        )

    # -- schedule management ------------------------------------------------

    def install_slotframe(self, sf: Slotframe) -> None:
        for other in self.slotframes:
            if other.priority == sf.priority:
                raise ValueError(f"duplicate slotframe priority {sf.priority}")
            if other.handle == sf.handle:
                raise ValueError(f"duplicate slotframe handle {sf.handle}")
        self.slotframes.append(sf)
        self.slotframes.sort(key=lambda s: s.priority)

    def slotframe(self, handle: int) -> Slotframe:
        for sf in self.slotframes:
            if sf.handle == handle:
                return sf
        raise KeyError(f"no slotframe with handle {handle}")

    # -- joining --------------------------------------------------------------

    def scan_channel(self, asn: int) -> int:
        """While unjoined, listen each slot on the hopping vector keyed by ASN."""
        return channel_for(asn, 0, self.hopping)

    def receive_eb(self, frame: Frame, asn: int) -> None:
        if not self.joined:
            self.joined = True
            self.time_source = frame.src
            self.join_asn = asn
            self.on_joined(frame.src, asn)

    # -- slot selection -------------------------------------------------------

    def enqueue(self, frame: Frame) -> bool:
        return self.queue.enqueue(frame)

    def _tx_candidate(self, cell: Cell) -> Optional[QueuedFrame]:
        """Oldest pending frame this cell may carry, honoring backoff holds.

        A cell whose peer is BROADCAST accepts any destination (common
        shared, minimal, and sender-based own slots); a unicast peer
        restricts the cell to that neighbor's queue.
        """
        if cell.autogen_eb:
            return None
        if cell.peer == BROADCAST:
            peers = [BROADCAST] + [
                p for p in self.queue.peers_with_traffic() if p != BROADCAST
            ]
        else:
            peers = [cell.peer]
        best: Optional[QueuedFrame] = None
        for qf in self.queue.heads_matching(cell.traffic, peers):
            if best is None or qf.enqueue_seq < best.enqueue_seq:
                best = qf
        return best

    def decide_slot(self, asn: int) -> SlotIntent:
        if not self.joined:
            return SlotIntent("rx", channel=self.scan_channel(asn))

        # Gather matching cells from all slotframes, highest priority first.
        chosen: Optional[tuple] = None  # (priority, tx_rank, channel_offset, plan)
        for sf in self.slotframes:
            for cell in sf.active_cells(asn):
                plan = self._plan_for_cell(cell, asn)
                if plan is None:
                    continue
                action, queued, frame = plan
                tx_rank = 0 if action == "tx" else 1
                key = (sf.priority, tx_rank, cell.channel_offset)
                if chosen is None or key < chosen[0]:
                    channel = channel_for(asn, cell.channel_offset, self.hopping)
                    chosen = (
                        key,
                        SlotIntent(action, channel, cell, queued, frame),
                    )
            if chosen is not None and chosen[0][0] == sf.priority:
                # Lower-priority slotframes cannot beat an actionable cell.
                break
        if chosen is None:
            return SlotIntent("sleep")
        return chosen[1]

    def _plan_for_cell(self, cell: Cell, asn: int):
        """Return (action, queued_frame, frame_on_air) or None if the cell is inert."""
        if CellOption.TX in cell.options:
            if cell.autogen_eb:
                return ("tx", None, self.make_eb())
            qf = self._tx_candidate(cell)
            if qf is not None:
                if CellOption.SHARED in cell.options and qf.backoff_skip > 0:
                    qf.backoff_skip -= 1  # this was an eligible shared slot; hold off
                else:
                    return ("tx", qf, qf.frame)
        if CellOption.RX in cell.options:
            return ("rx", None, None)
        return None

    # -- slot completion ------------------------------------------------------

    def complete_tx(self, intent: SlotIntent, acked: bool) -> str:
        """Apply the outcome of a transmission; returns 'tx_ok' or 'tx_fail'.

        Broadcast and autogenerated frames are one-shot. Unicast frames
        retry until MAX_RETRIES, with binary-exponential backoff applied
        only on shared cells; a dedicated cell retries at its next
        occurrence without backing off.
        """
        qf = intent.queued
        frame = intent.frame
        if qf is None:  # autogenerated EB, nothing queued
            return "tx_ok"
        if frame.dst == BROADCAST or not frame.needs_ack:
            self.queue.pop_delivered(frame.dst)
            return "tx_ok"
        if acked:
            self.queue.pop_delivered(frame.dst)
            self.on_ack(frame.dst, frame)
            return "tx_ok"
        qf.retries += 1
        dropped = qf.retries >= MAX_RETRIES
        if dropped:
            self.queue.pop_dropped(frame.dst)
        elif intent.cell is not None and CellOption.SHARED in intent.cell.options:
            qf.backoff_skip = int(self.rng.integers(0, 2**qf.backoff_exponent))
            qf.backoff_exponent = min(qf.backoff_exponent + 1, BACKOFF_MAX_BE)
        self.on_ack_missed(frame.dst, frame, dropped)
        return "tx_fail"

    def complete_rx(self, frame: Optional[Frame], asn: int) -> str:
        if frame is None:
            return "idle_listen"
        if frame.kind is FrameKind.EB:
            self.receive_eb(frame, asn)
        self.on_frame_rx(frame, asn)
        return "rx_ok"
