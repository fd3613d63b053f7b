"""Unit-disk radio medium: positions, link geometry, and per-slot delivery.

A transmission occupies one physical channel for one timeslot. A listener
receives a frame iff exactly one audible transmission (sender within the
interference range) exists on its channel in that slot and that sender is
also within decoding (transmission) range. Two or more audible senders on
the same channel collide and nothing is delivered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_TX_RANGE_M = 50.0
DEFAULT_INTERFERENCE_RANGE_M = 50.0


class UnknownNodeError(KeyError):
    """Lookup of a node id the medium does not know (or no longer serves)."""


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"position coordinates must be finite, got ({self.x}, {self.y})")

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Transmission:
    sender: int
    channel: int
    frame: object


class RadioMedium:
    """Static unit-disk propagation over a set of node positions."""

    def __init__(
        self,
        positions: dict[int, Position],
        tx_range: float = DEFAULT_TX_RANGE_M,
        interference_range: float = DEFAULT_INTERFERENCE_RANGE_M,
    ) -> None:
        if tx_range > interference_range:
            raise ValueError(
                f"tx_range ({tx_range}) must not exceed interference_range ({interference_range})"
            )
        self.tx_range = float(tx_range)
        self.interference_range = float(interference_range)
        self.positions = dict(positions)
        self._alive = set(self.positions)

    def remove_node(self, node_id: int) -> None:
        if node_id not in self._alive:
            raise UnknownNodeError(node_id)
        self._alive.discard(node_id)

    def is_alive(self, node_id: int) -> bool:
        return node_id in self._alive

    def distance(self, a: int, b: int) -> float:
        return self.positions[a].distance_to(self.positions[b])

    def neighbors(self, node_id: int) -> set[int]:
        """Alive nodes within tx_range of `node_id` (symmetric under equal ranges)."""
        if node_id not in self.positions or node_id not in self._alive:
            raise UnknownNodeError(node_id)
        me = self.positions[node_id]
        return {
            other
            for other in self._alive
            if other != node_id and me.distance_to(self.positions[other]) <= self.tx_range
        }

    def deliver(self, tx_set: list[Transmission], listener: int) -> Transmission | None:
        """Resolve one (timeslot, channel) at one listener.

        `tx_set` holds all transmissions on the channel the listener is
        tuned to. Returns the single decodable transmission, or None on
        silence or collision.
        """
        pos = self.positions[listener]
        audible = [
            tx
            for tx in tx_set
            if tx.sender != listener
            and pos.distance_to(self.positions[tx.sender]) <= self.interference_range
        ]
        if len(audible) != 1:
            return None
        tx = audible[0]
        if pos.distance_to(self.positions[tx.sender]) <= self.tx_range:
            return tx
        return None
