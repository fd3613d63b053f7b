"""Radio-on-time accounting with resettable measurement windows.

Radio-on time is the energy proxy: transmit and receive slots charge
identically, idle listening charges a full slot, and sleeping charges
nothing. Resets close the current window so that later queries reflect
only the time elapsed since the reset.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .kernel import SimLogicError


@dataclass
class _NodeMeter:
    on_ms: int = 0
    on_since: Optional[int] = None
    last_stamp: int = 0


@dataclass
class WindowSnapshot:
    label: str
    start_ms: int
    end_ms: int
    on_ms: dict[int, int] = field(default_factory=dict)

    @property
    def window_ms(self) -> int:
        return self.end_ms - self.start_ms

    def percent(self, node_id: int) -> float:
        if self.window_ms <= 0:
            raise SimLogicError("zero-length energy window")
        return 100.0 * self.on_ms.get(node_id, 0) / self.window_ms


class EnergyLedger:
    """Per-node radio-on milliseconds over the current measurement window."""

    def __init__(self, node_ids, window_label: str = "w0", start_ms: int = 0):
        self.window_start = start_ms
        self.window_label = window_label
        self._meters: dict[int, _NodeMeter] = {
            nid: _NodeMeter(last_stamp=start_ms) for nid in sorted(node_ids)
        }
        self.closed_windows: list[WindowSnapshot] = []

    def record(self, node_id: int, state: str, at: int) -> None:
        """Record a radio state transition; repeated same-state records are idempotent."""
        m = self._meters[node_id]
        if at < m.last_stamp:
            raise SimLogicError(
                f"energy record for node {node_id} at t={at} precedes t={m.last_stamp}"
            )
        m.last_stamp = at
        if state == "on":
            if m.on_since is None:
                m.on_since = at
        elif state == "off":
            if m.on_since is not None:
                m.on_ms += at - m.on_since
                m.on_since = None
        else:
            raise ValueError(f"radio state must be 'on' or 'off', got {state!r}")

    def _accrued(self, node_id: int, at: int) -> int:
        m = self._meters[node_id]
        live = (at - m.on_since) if m.on_since is not None else 0
        return m.on_ms + live

    def reset(self, at: int, new_label: Optional[str] = None) -> WindowSnapshot:
        """Close the current window at `at` and start a fresh one.

        A radio that is on keeps accruing into the new window.
        """
        snap = WindowSnapshot(
            self.window_label,
            self.window_start,
            at,
            {nid: self._accrued(nid, at) for nid in self._meters},
        )
        self.closed_windows.append(snap)
        for m in self._meters.values():
            m.on_ms = 0
            if m.on_since is not None:
                m.on_since = at
            m.last_stamp = max(m.last_stamp, at)
        self.window_start = at
        self.window_label = new_label or f"w{len(self.closed_windows)}"
        return snap

    def radio_on_percentage(
        self, at: int, node_id: Optional[int] = None, alive: Optional[set] = None
    ) -> float:
        """Radio-on share of the current window, per node or network average."""
        elapsed = at - self.window_start
        if elapsed <= 0:
            raise SimLogicError("radio_on_percentage needs a window of positive length")
        if node_id is not None:
            return 100.0 * self._accrued(node_id, at) / elapsed
        ids = sorted(self._meters if alive is None else alive)
        if not ids:
            raise SimLogicError("no nodes to average over")
        return sum(100.0 * self._accrued(n, at) / elapsed for n in ids) / len(ids)

    def on_ms_current(self, node_id: int, at: int) -> int:
        return self._accrued(node_id, at)
