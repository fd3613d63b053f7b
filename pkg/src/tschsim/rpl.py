"""Minimal upward-routing layer: DODAG formation from DIO messages paced by
trickle timers, hop-count parent selection with hysteresis, ack- and
silence-based neighbor-loss detection, and repair by poisoning.

The trickle state machine is a pure transition function (`trickle_step`)
so it can be checked against an independent interpreter; `TrickleDriver`
binds it to kernel timers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

INFINITE_RANK = 0xFFFF
ROOT_RANK = 256
RANK_INCREMENT = 256
PARENT_SWITCH_HYSTERESIS = 128
ROUTELESS_METRIC = 0xFF  # beacon hop metric advertised while no route exists

DEFAULT_I_MIN_MS = 4096
DEFAULT_DOUBLINGS = 8
# The classic redundancy constant of 10 never suppresses in networks with a
# handful of neighbors; with k=1 a node stays quiet whenever it already heard
# a consistent DIO this interval, which is what keeps a small steady network
# almost silent between doublings.
DEFAULT_REDUNDANCY_K = 1

MAX_MISSED_ACKS = 8
SILENCE_TIMEOUT_MS = 120_000
PROBE_INTERVAL_MS = 120_000
HOUSEKEEPING_PERIOD_MS = 1000


class TrickleEvent(enum.Enum):
    START = "start"
    CONSISTENT_RX = "consistent_rx"
    INCONSISTENCY = "inconsistency"
    T_REACHED = "t_reached"
    INTERVAL_END = "interval_end"


@dataclass(frozen=True)
class TrickleConfig:
    i_min_ms: int = DEFAULT_I_MIN_MS
    doublings: int = DEFAULT_DOUBLINGS
    k: int = DEFAULT_REDUNDANCY_K

    @property
    def i_max_ms(self) -> int:
        return self.i_min_ms * (2**self.doublings)


@dataclass(frozen=True)
class TrickleState:
    """Current interval I, firing point t (offset inside the interval), and
    redundancy counter c. `interval_began` marks a fresh interval so the
    driver knows to re-arm its timers."""

    config: TrickleConfig
    i_ms: int = 0
    t_ms: int = 0
    c: int = 0
    running: bool = False
    interval_began: bool = False


def _draw_t(i_ms: int, u: float) -> int:
    # t uniform in [I/2, I)
    return int(i_ms / 2 + u * (i_ms / 2))


def trickle_step(
    state: TrickleState, event: TrickleEvent, u: float = 0.0
) -> tuple[TrickleState, bool]:
    """Advance the trickle machine by one event.

    `u` in [0, 1) supplies the randomness for the firing-point draw.
    Returns (new state, whether a DIO transmission is triggered).
    """
    cfg = state.config
    if event is TrickleEvent.START:
        i = cfg.i_min_ms
        return (
            replace(state, i_ms=i, t_ms=_draw_t(i, u), c=0, running=True, interval_began=True),
            False,
        )
    if not state.running:
        return (replace(state, interval_began=False), False)
    if event is TrickleEvent.CONSISTENT_RX:
        return (replace(state, c=state.c + 1, interval_began=False), False)
    if event is TrickleEvent.T_REACHED:
        return (replace(state, interval_began=False), state.c < cfg.k)
    if event is TrickleEvent.INTERVAL_END:
        i = min(2 * state.i_ms, cfg.i_max_ms)
        return (
            replace(state, i_ms=i, t_ms=_draw_t(i, u), c=0, interval_began=True),
            False,
        )
    if event is TrickleEvent.INCONSISTENCY:
        if state.i_ms > cfg.i_min_ms:
            i = cfg.i_min_ms
            return (
                replace(state, i_ms=i, t_ms=_draw_t(i, u), c=0, interval_began=True),
                False,
            )
        return (replace(state, interval_began=False), False)
    raise ValueError(f"unknown trickle event {event!r}")


class TrickleDriver:
    """Binds the trickle transition function to kernel timers for one node."""

    def __init__(self, kernel, rng, config: TrickleConfig, node_id: int):
        self.kernel = kernel
        self.rng = rng
        self.node_id = node_id
        self.state = TrickleState(config)
        self.generation = 0  # invalidates stale timer events after resets
        self.on_trigger: Callable[[], None] = lambda: None
        self.on_interval_change: Callable[[int], None] = lambda i_ms: None

    @property
    def running(self) -> bool:
        return self.state.running

    @property
    def interval_ms(self) -> int:
        return self.state.i_ms

    def _feed(self, event: TrickleEvent) -> None:
        state, trigger = trickle_step(self.state, event, float(self.rng.random()))
        old_i = self.state.i_ms
        self.state = state
        if trigger:
            self.on_trigger()
        if state.interval_began:
            self.generation += 1
            self._arm_timers()
            if state.i_ms != old_i or event is TrickleEvent.START:
                self.on_interval_change(state.i_ms)

    def _arm_timers(self) -> None:
        gen = self.generation
        start = self.kernel.now
        self.kernel.schedule(
            start + self.state.t_ms, lambda: self._timer(gen, TrickleEvent.T_REACHED),
            target=self.node_id,
        )
        self.kernel.schedule(
            start + self.state.i_ms, lambda: self._timer(gen, TrickleEvent.INTERVAL_END),
            target=self.node_id,
        )

    def _timer(self, generation: int, event: TrickleEvent) -> None:
        if generation != self.generation:
            return  # superseded by a reset
        self._feed(event)

    def start(self) -> None:
        if self.state.running:
            return
        self._feed(TrickleEvent.START)

    def consistent_rx(self) -> None:
        if self.state.running:
            self._feed(TrickleEvent.CONSISTENT_RX)

    def inconsistency(self) -> None:
        if self.state.running:
            self._feed(TrickleEvent.INCONSISTENCY)

    def stop(self) -> None:
        self.generation += 1
        self.state = replace(self.state, running=False, interval_began=False)


@dataclass
class NeighborHealth:
    """Per-neighbor loss-detection state."""

    last_heard_ms: int = 0
    missed_acks: int = 0


@dataclass
class DioMessage:
    sender: int
    rank: int
    version: int = 0


@dataclass
class DodagState:
    parent: Optional[int] = None
    rank: int = INFINITE_RANK
    children: set[int] = field(default_factory=set)
    candidates: dict[int, int] = field(default_factory=dict)  # neighbor -> last rank
    version: int = 0


class RplNode:
    """Routing state machine for one node, driven by MAC callbacks and timers.

    The owning simulation wires the outbound hooks (send_dio, send_probe,
    forward_data, neighbor add/remove notifications for the scheduler).
    """

    def __init__(
        self,
        node_id: int,
        kernel,
        rng,
        trickle_config: TrickleConfig,
        is_root: bool = False,
        hysteresis: int = PARENT_SWITCH_HYSTERESIS,
    ):
        self.node_id = node_id
        self.kernel = kernel
        self.rng = rng
        self.is_root = is_root
        self.hysteresis = hysteresis
        self.dodag = DodagState()
        self.health: dict[int, NeighborHealth] = {}
        self.trickle = TrickleDriver(kernel, rng, trickle_config, node_id)
        self.dio_count = 0
        # wiring
        self.send_dio: Callable[[DioMessage], None] = lambda dio: None
        self.send_probe: Callable[[int], None] = lambda nbr: None
        self.on_parent_change: Callable[[Optional[int], Optional[int]], None] = (
            lambda old, new: None
        )
        self.on_neighbor_added: Callable[[int], None] = lambda nbr: None
        self.on_neighbor_removed: Callable[[int], None] = lambda nbr: None
        self.on_inconsistency: Callable[[str], None] = lambda cause: None
        self.log: Callable[[str, dict], None] = lambda event, detail: None
        self._probe_deadline = 0

        self.trickle.on_trigger = self._trigger_dio

    # -- lifecycle ------------------------------------------------------------

    def start_root(self) -> None:
        self.dodag.rank = ROOT_RANK
        self.trickle.start()
        self._schedule_probe()

    def _schedule_probe(self) -> None:
        # stagger the first probe uniformly inside one probe interval
        delay = int(self.rng.random() * PROBE_INTERVAL_MS) + 1
        self._probe_deadline = self.kernel.now + delay
        self.kernel.schedule(self._probe_deadline, self._probe_tick, target=self.node_id)

    def _probe_tick(self) -> None:
        if self.kernel.now >= self._probe_deadline:
            target = self._probe_target()
            if target is not None:
                self.send_probe(target)
            self._probe_deadline = self.kernel.now + PROBE_INTERVAL_MS
            self.kernel.schedule(self._probe_deadline, self._probe_tick, target=self.node_id)

    def _probe_target(self) -> Optional[int]:
        """Least-recently-heard routing neighbor (parent, candidate, or child)."""
        known = set(self.dodag.candidates) | set(self.dodag.children)
        if self.dodag.parent is not None:
            known.add(self.dodag.parent)
        known.discard(self.node_id)
        if not known:
            return None
        return min(
            sorted(known), key=lambda n: self.health.get(n, NeighborHealth()).last_heard_ms
        )

    # -- inbound events ---------------------------------------------------------

    def heard_from(self, neighbor: int, now: int) -> None:
        """Any decoded frame or ack from `neighbor` refreshes its health."""
        h = self.health.setdefault(neighbor, NeighborHealth())
        h.last_heard_ms = now
        h.missed_acks = 0

    def ack_missed(self, neighbor: int, now: int) -> None:
        h = self.health.setdefault(neighbor, NeighborHealth())
        h.missed_acks += 1
        if h.missed_acks >= MAX_MISSED_ACKS:
            self.neighbor_lost(neighbor, "missed_acks")

    def process_dio(self, dio: DioMessage, now: int) -> None:
        if dio.sender == self.node_id:
            return
        self.heard_from(dio.sender, now)
        if self.is_root:
            # The root ignores DIOs for routing, but they still feed its
            # trickle redundancy counter (or signal trouble, if poisoned).
            if dio.rank >= INFINITE_RANK:
                self._signal_inconsistency("poison_heard")
            else:
                self.trickle.consistent_rx()
            return
        previous_rank = self.dodag.candidates.get(dio.sender)
        self.dodag.candidates[dio.sender] = dio.rank
        if previous_rank is None:
            self.on_neighbor_added(dio.sender)

        if dio.rank >= INFINITE_RANK:
            # A poisoning neighbor: unusable as a route, and evidence of a
            # topology change close by.
            if dio.sender == self.dodag.parent:
                self._lose_parent("parent_poisoned")
            else:
                self._signal_inconsistency("poison_heard")
            return

        consistent = True
        if self.dodag.parent is None:
            self._adopt_parent(dio.sender)
            consistent = False
        else:
            best = self._best_candidate()
            current = self.dodag.candidates.get(self.dodag.parent, INFINITE_RANK)
            if best is not None and current - self.dodag.candidates[best] >= self.hysteresis:
                self._switch_parent(best)
                consistent = False
            elif dio.sender == self.dodag.parent:
                self._update_own_rank()
        if consistent:
            self.trickle.consistent_rx()

    def heard_routeless_beacon(self, sender: int, now: int) -> None:
        """A beacon from a neighbor that has no route yet.

        Works like an implicit solicitation: a routed node answers by
        resetting its trickle timer so a fresh DIO goes out soon. This
        breaks the starvation where a first DIO is lost to a collision
        and redundancy suppression then keeps every routed node quiet.
        Trickle's reset rule (no-op at I_min) rate-limits the response.
        """
        self.heard_from(sender, now)
        if self.has_route() and self.trickle.running:
            self._signal_inconsistency("routeless_neighbor")

    def data_from_child(self, child: int, now: int) -> None:
        if child == self.node_id:
            return
        self.heard_from(child, now)
        if child not in self.dodag.children:
            self.dodag.children.add(child)
            self.on_neighbor_added(child)
            self.log("child_added", {"child": child})

    # -- parent management --------------------------------------------------------

    def _best_candidate(self) -> Optional[int]:
        usable = [
            (rank, nbr)
            for nbr, rank in sorted(self.dodag.candidates.items())
            if rank < INFINITE_RANK and nbr not in self.dodag.children
        ]
        if not usable:
            return None
        rank, nbr = min(usable)
        return nbr

    def _adopt_parent(self, parent: int) -> None:
        first_parent = self.dodag.parent is None and not self.trickle.running
        self.dodag.parent = parent
        self._update_own_rank()
        self.on_parent_change(None, parent)
        self.log("parent", {"parent": parent, "rank": self.dodag.rank})
        if first_parent:
            self.trickle.start()
            self._schedule_probe()
        else:
            # regaining reachability after repair counts as a topology change
            self._signal_inconsistency("parent_regained")

    def _switch_parent(self, new_parent: int) -> None:
        old = self.dodag.parent
        self.dodag.parent = new_parent
        self._update_own_rank()
        self.on_parent_change(old, new_parent)
        self.log("parent", {"parent": new_parent, "rank": self.dodag.rank, "old": old})

    def _update_own_rank(self) -> None:
        if self.is_root:
            return
        if self.dodag.parent is None:
            self.dodag.rank = INFINITE_RANK
        else:
            self.dodag.rank = self.dodag.candidates[self.dodag.parent] + RANK_INCREMENT

    def _lose_parent(self, cause: str) -> None:
        old = self.dodag.parent
        self.dodag.parent = None
        self.dodag.rank = INFINITE_RANK
        self.on_parent_change(old, None)
        self._signal_inconsistency(cause)
        # poison first so neighbors routing through us learn immediately
        self.send_dio(DioMessage(self.node_id, INFINITE_RANK, self.dodag.version))
        self.log("poison", {"lost_parent": old, "cause": cause})
        best = self._best_candidate()
        if best is not None:
            self._adopt_parent(best)
        else:
            self.log("unreachable", {})

    def _signal_inconsistency(self, cause: str) -> None:
        self.on_inconsistency(cause)
        self.trickle.inconsistency()

    # -- loss detection -------------------------------------------------------------

    def neighbor_lost(self, neighbor: int, cause: str) -> None:
        """Neighbor declared dead: detach it and repair if it was the parent."""
        was_parent = neighbor == self.dodag.parent
        was_child = neighbor in self.dodag.children
        was_candidate = neighbor in self.dodag.candidates
        if not (was_parent or was_child or was_candidate):
            return
        self.dodag.candidates.pop(neighbor, None)
        self.dodag.children.discard(neighbor)
        self.health.pop(neighbor, None)
        self.on_neighbor_removed(neighbor)
        self.log("neighbor_lost", {"neighbor": neighbor, "cause": cause})
        if was_parent:
            self._lose_parent(f"parent_lost:{cause}")
        # A lost child or spare candidate changes no upward routing state,
        # so it does not reset the trickle timer.

    def housekeeping(self, now: int) -> None:
        """Silence check; the parent beacons steadily, children forward data."""
        parent = self.dodag.parent
        if parent is not None:
            h = self.health.get(parent)
            if h is not None and now - h.last_heard_ms >= SILENCE_TIMEOUT_MS:
                self.neighbor_lost(parent, "silence")
        for child in sorted(self.dodag.children):
            h = self.health.get(child)
            if h is not None and now - h.last_heard_ms >= SILENCE_TIMEOUT_MS:
                self.neighbor_lost(child, "silence")

    # -- outbound -------------------------------------------------------------------

    def _trigger_dio(self) -> None:
        self.dio_count += 1
        self.send_dio(DioMessage(self.node_id, self.dodag.rank, self.dodag.version))
        self.log("dio_triggered", {"n": self.dio_count})

    def has_route(self) -> bool:
        return self.is_root or self.dodag.parent is not None
