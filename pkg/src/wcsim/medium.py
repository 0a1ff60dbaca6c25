"""Single-collision-domain wireless channel with unslotted CSMA/CA.

Every attached node owns one FIFO transmit queue and contends for the one
shared channel.  Carrier sensing is instantaneous at backoff expiry; a
transmission that starts at the same microsecond as the sensing node's own
start is invisible to it, so simultaneous backoff expiries collide and all
overlapping transmissions are corrupted symmetrically.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .engine import Simulator, SimulationError, to_us

# packet kinds on the wire
SAMPLE = "sample"
COMMAND = "command"
REPORT = "report"
INTERFERENCE = "interference"

# terminal outcomes for a submitted packet
DELIVERED = "delivered"
LOST_COLLISION = "collision"
LOST_ACCESS = "access_failure"
LOST_RANDOM = "random_loss"
LOST_QUEUE = "queue_drop"


@dataclass
class ChannelParams:
    """MAC/PHY parameters of the shared channel."""
    bitrate: float = 250_000.0        # bits per second
    backoff_unit: float = 0.00032     # seconds per backoff unit
    min_be: int = 3                   # initial backoff exponent
    max_be: int = 5                   # backoff exponent cap
    max_csma_backoffs: int = 4        # busy-channel retries before access failure
    loss_prob: float = 0.0            # independent loss applied to clean transmissions
    mac_overhead_bytes: int = 0
    mac_retries: int = 0              # full CSMA re-attempts after a lost transmission
    queue_limit: Optional[int] = None  # per-node waiting queue cap (None = unbounded)


@dataclass
class Packet:
    src: str
    dst: str
    kind: str
    size_bytes: int = 32
    loop_id: Optional[int] = None
    sample_value: Optional[float] = None
    command_value: Optional[float] = None
    period: Optional[float] = None      # sampling period carried in-band, seconds
    release_us: Optional[int] = None
    deadline_us: Optional[int] = None


def tx_duration(packet: Packet, params: ChannelParams) -> float:
    """Airtime of one packet in seconds: (payload + MAC overhead) bits over bitrate."""
    return (packet.size_bytes + params.mac_overhead_bytes) * 8 / params.bitrate


@dataclass
class PacketCounters:
    offered: int = 0
    delivered: int = 0
    collision: int = 0
    access_failure: int = 0
    random_loss: int = 0
    queue_drop: int = 0

    def lost(self) -> int:
        return self.collision + self.access_failure + self.random_loss + self.queue_drop

    def as_dict(self) -> dict:
        return {
            "offered": self.offered,
            "delivered": self.delivered,
            "collision": self.collision,
            "access_failure": self.access_failure,
            "random_loss": self.random_loss,
            "queue_drop": self.queue_drop,
        }


class Transmission:
    __slots__ = ("start_us", "end_us", "packet", "corrupted", "outcome")

    def __init__(self, start_us: int, end_us: int, packet: Packet):
        self.start_us = start_us
        self.end_us = end_us
        self.packet = packet
        self.corrupted = False
        self.outcome: Optional[str] = None


class _Transmitter:
    """Per-node MAC state: one packet in service, the rest waiting in FIFO order."""
    __slots__ = ("node_id", "rng", "queue", "current", "nb", "be", "retries_left")

    def __init__(self, node_id: str, rng: Optional[random.Random]):
        self.node_id = node_id
        self.rng = rng
        self.queue: deque[Packet] = deque()
        self.current: Optional[Packet] = None
        self.nb = 0
        self.be = 0
        self.retries_left = 0


class Medium:
    def __init__(self, sim: Simulator, params: ChannelParams):
        self.sim = sim
        self.params = params
        self._backoff_unit_us = to_us(params.backoff_unit)
        if self._backoff_unit_us <= 0:
            raise SimulationError("backoff_unit must be at least 1 microsecond")
        self._tx: dict[str, _Transmitter] = {}
        self._receivers: dict[str, Optional[Callable[[Packet], None]]] = {}
        self._active: dict[int, Transmission] = {}
        self._next_tx_id = 0
        self.stats = PacketCounters()
        self.by_loop: dict[Optional[int], PacketCounters] = {}
        self.tx_log: list[Transmission] = []

    def attach(self, node_id: str, rng: Optional[random.Random] = None,
               on_receive: Optional[Callable[[Packet], None]] = None) -> None:
        if node_id in self._tx:
            raise SimulationError(f"node id {node_id!r} attached twice")
        self._tx[node_id] = _Transmitter(node_id, rng)
        self._receivers[node_id] = on_receive

    # -- transmit path -------------------------------------------------

    def submit(self, packet: Packet) -> None:
        """Queue a packet at the sending node; starts CSMA/CA if the node is idle."""
        t = self._tx.get(packet.src)
        if t is None:
            raise SimulationError(f"unknown sender {packet.src!r}")
        if t.rng is None:
            raise SimulationError(f"node {packet.src!r} was attached without an RNG stream")
        if packet.dst not in self._receivers:
            raise SimulationError(f"unknown destination {packet.dst!r}")
        self.stats.offered += 1
        self._count(packet).offered += 1
        limit = self.params.queue_limit
        if t.current is not None and limit is not None and len(t.queue) >= limit:
            self._finish_packet(packet, LOST_QUEUE)
            return
        t.queue.append(packet)
        if t.current is None:
            self._service_next(t)

    def _service_next(self, t: _Transmitter) -> None:
        if not t.queue:
            t.current = None
            return
        t.current = t.queue.popleft()
        t.retries_left = self.params.mac_retries
        self._begin_csma(t)

    def _begin_csma(self, t: _Transmitter) -> None:
        t.nb = 0
        t.be = self.params.min_be
        self._begin_backoff(t)

    def _begin_backoff(self, t: _Transmitter) -> None:
        units = t.rng.randrange(2 ** t.be)
        self.sim.schedule_in(units * self._backoff_unit_us,
                             lambda: self._on_backoff_expired(t),
                             kind="backoff", target=t.node_id)

    def _on_backoff_expired(self, t: _Transmitter) -> None:
        now = self.sim.now
        if self._busy_at(now):
            t.nb += 1
            t.be = min(t.be + 1, self.params.max_be)
            if t.nb > self.params.max_csma_backoffs:
                self._finish_packet(t.current, LOST_ACCESS)
                self._service_next(t)
            else:
                self._begin_backoff(t)
        else:
            self._begin_transmission(t)

    def _busy_at(self, now: int) -> bool:
        # A transmission starting this same microsecond is not yet sensible,
        # hence the strict start < now: simultaneous starts must collide.
        return any(tr.start_us < now < tr.end_us for tr in self._active.values())

    def _begin_transmission(self, t: _Transmitter) -> None:
        now = self.sim.now
        dur_us = to_us(tx_duration(t.current, self.params))
        tr = Transmission(now, now + dur_us, t.current)
        overlapping = [a for a in self._active.values() if a.end_us > now]
        if overlapping:
            tr.corrupted = True
            for a in overlapping:
                a.corrupted = True
        tx_id = self._next_tx_id
        self._next_tx_id += 1
        self._active[tx_id] = tr
        self.tx_log.append(tr)
        self.sim.schedule_at(tr.end_us, lambda: self._on_tx_end(t, tx_id, tr),
                             kind="tx_end", target=t.node_id)

    def _on_tx_end(self, t: _Transmitter, tx_id: int, tr: Transmission) -> None:
        del self._active[tx_id]
        packet = tr.packet
        if tr.corrupted:
            loss = LOST_COLLISION
        elif self.params.loss_prob > 0 and t.rng.random() < self.params.loss_prob:
            loss = LOST_RANDOM
        else:
            loss = None
        if loss is None:
            tr.outcome = DELIVERED
            self._finish_packet(packet, DELIVERED)
            receiver = self._receivers[packet.dst]
            if receiver is not None:
                self.sim.schedule_at(self.sim.now, lambda: receiver(packet),
                                     kind="delivery", target=packet.dst)
            self._service_next(t)
        elif t.retries_left > 0:
            t.retries_left -= 1
            tr.outcome = loss
            self._begin_csma(t)
        else:
            tr.outcome = loss
            self._finish_packet(packet, loss)
            self._service_next(t)

    # -- accounting ----------------------------------------------------

    def _count(self, packet: Packet) -> PacketCounters:
        per_loop = self.by_loop.get(packet.loop_id)
        if per_loop is None:
            per_loop = self.by_loop[packet.loop_id] = PacketCounters()
        return per_loop

    def _finish_packet(self, packet: Packet, outcome: str) -> None:
        for counters in (self.stats, self._count(packet)):
            setattr(counters, outcome, getattr(counters, outcome) + 1)

    def busy_time_us(self, until_us: int) -> int:
        """Length of the union of all transmission intervals clipped to [0, until_us]."""
        intervals = sorted((tr.start_us, min(tr.end_us, until_us)) for tr in self.tx_log
                           if tr.start_us < until_us)
        busy = 0
        cursor = 0
        for start, end in intervals:
            start = max(start, cursor)
            if end > start:
                busy += end - start
                cursor = end
        return busy
