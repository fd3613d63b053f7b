"""Deterministic discrete-event kernel and seeded per-node RNG streams.

Time is counted in integer ticks of 1 ms; 1000 ticks equal one second.
Events fire in (fire_at, seq) lexicographic order, where seq is the
insertion sequence number, so same-time events keep insertion order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

TICKS_PER_SECOND = 1000


class SimLogicError(RuntimeError):
    """A violated kernel precondition (e.g. scheduling in the past)."""


@dataclass(order=True)
class Event:
    fire_at: int
    seq: int
    action: Callable[[], None] = field(compare=False)
    target: object = field(default=None, compare=False)


class Kernel:
    """Single-threaded event loop owning the simulation clock."""

    def __init__(self) -> None:
        self.now: int = 0
        self._seq = 0
        self._heap: list[Event] = []

    def schedule(self, fire_at: int, action: Callable[[], None], target=None) -> Event:
        """Queue `action` to run at `fire_at` ticks. Scheduling in the past is fatal."""
        if fire_at < self.now:
            raise SimLogicError(
                f"cannot schedule event at t={fire_at} before current time t={self.now}"
            )
        self._seq += 1
        ev = Event(int(fire_at), self._seq, action, target)
        heapq.heappush(self._heap, ev)
        return ev

    def run_until(self, t_end: int) -> int:
        """Process every event with fire_at <= t_end; leave the clock at t_end.

        Returns the number of events processed.
        """
        if t_end < self.now:
            raise SimLogicError(f"run_until({t_end}) is before current time {self.now}")
        processed = 0
        while self._heap and self._heap[0].fire_at <= t_end:
            ev = heapq.heappop(self._heap)
            self.now = ev.fire_at
            ev.action()
            processed += 1
        self.now = t_end
        return processed

    def pending(self) -> int:
        return len(self._heap)


class RngStreams:
    """Per-node random substreams split from one master seed.

    Each node id gets an independent generator, so adding or removing
    draws on one node's stream never perturbs another's. Identical seed
    and scenario therefore give bit-identical traces.
    """

    def __init__(self, master_seed: int) -> None:
        self.master_seed = int(master_seed)
        self._streams: dict[int, np.random.Generator] = {}

    def for_node(self, node_id: int) -> np.random.Generator:
        gen = self._streams.get(node_id)
        if gen is None:
            seq = np.random.SeedSequence(self.master_seed, spawn_key=(node_id,))
            gen = np.random.Generator(np.random.PCG64(seq))
            self._streams[node_id] = gen
        return gen
