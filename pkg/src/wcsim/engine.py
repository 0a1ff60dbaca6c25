"""Deterministic discrete-event core: microsecond clock and ordered event queue.

All simulated time is kept as integer microseconds so that event ordering
never depends on floating-point rounding.  Ties in firing time are broken
by insertion order, which makes a whole run a pure function of its inputs.
"""

from __future__ import annotations

import heapq
import random
from typing import Callable

US_PER_SECOND = 1_000_000


def to_us(seconds: float) -> int:
    """Convert seconds to the integer-microsecond grid used by the clock."""
    return int(round(seconds * US_PER_SECOND))


def to_seconds(us: int) -> float:
    return us / US_PER_SECOND


def derive_rng(master_seed: int, node_id: str) -> random.Random:
    """Independent pseudo-random stream for one node.

    Keyed by node id rather than creation order, so adding or removing a
    node never perturbs the draws seen by any other node.  String seeding
    goes through random.Random's hash-independent (SHA-512) path.
    """
    return random.Random(f"{master_seed}:{node_id}")


class SimulationError(RuntimeError):
    """Fatal condition inside a simulation run (programming or numeric error)."""


class Event:
    __slots__ = ("fire_at", "seq", "kind", "target", "fn")

    def __init__(self, fire_at: int, seq: int, kind: str, target: str,
                 fn: Callable[[], None]):
        self.fire_at = fire_at
        self.seq = seq
        self.kind = kind
        self.target = target
        self.fn = fn

    def __lt__(self, other: "Event") -> bool:
        return (self.fire_at, self.seq) < (other.fire_at, other.seq)

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"Event(t={self.fire_at}us #{self.seq} {self.kind}->{self.target})"


class Simulator:
    """Single-threaded event loop over integer-microsecond time."""

    def __init__(self):
        self.now = 0            # current time, us
        self._seq = 0           # monotone insertion counter
        self._pending: list[Event] = []
        self.dispatched = 0

    def schedule_at(self, at_us: int, fn: Callable[[], None],
                    kind: str = "", target: str = "") -> Event:
        """Enqueue fn to run at an absolute time (must not lie in the past)."""
        if not isinstance(at_us, int):
            raise SimulationError(f"event time must be integer microseconds, got {at_us!r}")
        if at_us < self.now:
            raise SimulationError(
                f"cannot schedule event '{kind}' at {at_us}us before current time {self.now}us")
        ev = Event(at_us, self._seq, kind, target, fn)
        self._seq += 1
        heapq.heappush(self._pending, ev)
        return ev

    def schedule_in(self, delay_us: int, fn: Callable[[], None],
                    kind: str = "", target: str = "") -> Event:
        return self.schedule_at(self.now + delay_us, fn, kind, target)

    def run_until(self, t_end_us: int) -> None:
        """Dispatch every event with fire_at <= t_end_us, then set the clock to t_end_us."""
        if t_end_us < self.now:
            raise SimulationError(f"run_until({t_end_us}) is before current time {self.now}")
        pending = self._pending
        while pending and pending[0].fire_at <= t_end_us:
            ev = heapq.heappop(pending)
            self.now = ev.fire_at
            self.dispatched += 1
            ev.fn()
        self.now = t_end_us
