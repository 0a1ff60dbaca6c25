"""Node state machines: periodic sensor, PID controller, deadline-checking actuator.

One ControlLoop owns the three nodes of a loop plus its plant and trace.
The sensor is time triggered; controller and actuator react to packet
deliveries.  Under the adaptive scheme the sensor also runs a periodic
adaptation tick; under the fixed scheme the same tick only measures the
miss ratio so that both schemes report comparable statistics.

Deadline bookkeeping: the actuator applies every command it receives (late
ones included) but acknowledges only commands that arrive by their
deadline.  The sensor counts released samples and received acknowledgements
per interval; the deficit is the miss count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .engine import Simulator, to_us
from .medium import COMMAND, Medium, Packet, REPORT, SAMPLE, INTERFERENCE
from .metrics import LoopTrace
from .plant import LtiPlant
from .sampler import (SamplerParams, SamplerState, adapt_period,
                      filtered_error, measure_miss_ratio)

SCHEME_FIXED = "tt"
SCHEME_ADAPTIVE = "ftt"

# beyond this magnitude a plant is pinned to avoid float overflow in runs
# that are intentionally driven unstable; divergence is flagged much earlier
FREEZE_LIMIT = 1e9


@dataclass
class ReferenceSpec:
    """Square-wave setpoint: high for the first half of each wave period."""
    wave_period: float = 4.0
    high: float = 1.0
    low: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.wave_period <= 0:
            raise ValueError("wave_period must be positive")

    def value(self, t_us: int) -> float:
        period_us = to_us(self.wave_period)
        offset = (t_us - to_us(self.phase)) % period_us
        return self.high if offset < period_us / 2 else self.low


class PidController:
    """Discrete PID with trapezoidal integral; the sampling period is an input."""

    def __init__(self, kp: float = 100.0, ki: float = 200.0, kd: float = 2.0):
        self.kp = kp
        self.ki = ki
        self.kd = kd
        self.i_term = 0.0
        self.prev_err = 0.0

    def reset(self) -> None:
        self.i_term = 0.0
        self.prev_err = 0.0

    def step(self, r: float, y: float, h: float) -> float:
        if h <= 0:
            raise ValueError(f"sampling period must be positive, got {h}")
        err = r - y
        p = self.kp * err
        self.i_term = self.i_term + self.ki * h * (err + self.prev_err) / 2.0
        d = self.kd * (err - self.prev_err) / h
        self.prev_err = err
        return p + self.i_term + d


class ControlLoop:
    """Sensor, controller and actuator of one loop, wired to the shared medium."""

    def __init__(self, sim: Simulator, medium: Medium, loop_id: int, *,
                 scheme: str, trace: LoopTrace, plant: LtiPlant,
                 sampler_params: SamplerParams, reference: ReferenceSpec,
                 initial_period: float, rng_factory,
                 compute_delay: float = 0.0, report_over_medium: bool = False,
                 divergence_bound: float = 1e3, packet_bytes: int = 32):
        self.sim = sim
        self.medium = medium
        self.loop_id = loop_id
        self.scheme = scheme
        self.trace = trace
        self.plant = plant
        self.params = sampler_params
        self.reference = reference
        self.initial_period = initial_period
        self.compute_delay_us = to_us(compute_delay)
        self.report_over_medium = report_over_medium
        self.divergence_bound = divergence_bound
        self.packet_bytes = packet_bytes

        self.sensor_id = f"loop{loop_id}.sensor"
        self.controller_id = f"loop{loop_id}.controller"
        self.actuator_id = f"loop{loop_id}.actuator"
        medium.attach(self.sensor_id, rng_factory(self.sensor_id), self._on_sensor_packet)
        medium.attach(self.controller_id, rng_factory(self.controller_id), self._on_sample)
        medium.attach(self.actuator_id, rng_factory(self.actuator_id), self._on_command)

        self.pid = PidController()
        self.sampler = SamplerState(h=initial_period)
        self.active = False
        self.epoch = 0               # invalidates timer events from earlier activations
        self.h = initial_period
        self.periods_count = 0
        self.success_count = 0
        self.plant_t_us = 0
        self.frozen = False

    # -- activation ------------------------------------------------------

    def schedule_windows(self, windows: list[list[float]]) -> None:
        for start, end in windows:
            self.sim.schedule_at(to_us(start), self._activate, "activate", self.sensor_id)
            self.sim.schedule_at(to_us(end), self._deactivate, "deactivate", self.sensor_id)

    def _activate(self) -> None:
        if self.active:
            return
        now = self.sim.now
        self.active = True
        self.epoch += 1
        epoch = self.epoch
        self.h = self.initial_period
        self.sampler = SamplerState(h=self.initial_period)
        self.pid.reset()
        self.periods_count = 0
        self.success_count = 0
        self.trace.open_span(now)
        self.trace.add_period(now, self.h)
        self._sync_plant(now)
        self.sim.schedule_at(now, lambda: self._on_sample_timer(epoch),
                             "sample", self.sensor_id)
        self.sim.schedule_at(now + to_us(self.params.interval),
                             lambda: self._on_interval_timer(epoch),
                             "adapt_tick", self.sensor_id)

    def _deactivate(self) -> None:
        if not self.active:
            return
        self.active = False
        self._sync_plant(self.sim.now)
        self.trace.close_span(self.sim.now)

    def finalize(self, t_end_us: int) -> None:
        """Close the trace at the end of the run."""
        if self.active:
            self._sync_plant(t_end_us)
            self.trace.close_span(t_end_us)
            self.active = False

    # -- sensor ------------------------------------------------------------

    def _on_sample_timer(self, epoch: int) -> None:
        if not self.active or epoch != self.epoch:
            return
        now = self.sim.now
        y = self._sync_plant(now)
        h_us = to_us(self.h)
        self.medium.submit(Packet(
            src=self.sensor_id, dst=self.controller_id, kind=SAMPLE,
            size_bytes=self.packet_bytes, loop_id=self.loop_id,
            sample_value=y, period=self.h,
            release_us=now, deadline_us=now + h_us))
        self.periods_count += 1
        self.sim.schedule_at(now + h_us, lambda: self._on_sample_timer(epoch),
                             "sample", self.sensor_id)

    def _on_interval_timer(self, epoch: int) -> None:
        if not self.active or epoch != self.epoch:
            return
        now = self.sim.now
        measured = measure_miss_ratio(self.periods_count, self.success_count,
                                      self.sampler.miss_ratio_prev)
        lam = self.params.forgetting
        filtered = lam * measured + (1.0 - lam) * self.sampler.miss_ratio_prev
        if self.scheme == SCHEME_ADAPTIVE:
            err = filtered_error(measured, self.sampler, self.params)
            self.h = adapt_period(err, self.sampler, self.params)
            self.trace.add_period(now, self.h)
        self.sampler.miss_ratio_prev = measured
        self.trace.add_miss_ratio(now, measured, filtered)
        self.periods_count = 0
        self.success_count = 0
        self.sim.schedule_at(now + to_us(self.params.interval),
                             lambda: self._on_interval_timer(epoch),
                             "adapt_tick", self.sensor_id)

    def _on_sensor_packet(self, packet: Packet) -> None:
        if packet.kind == REPORT and self.active:
            self.success_count += 1

    # -- controller ----------------------------------------------------------

    def _on_sample(self, packet: Packet) -> None:
        if packet.kind != SAMPLE or not self.active:
            return
        r = self.reference.value(packet.release_us)
        u = self.pid.step(r, packet.sample_value, packet.period)
        command = Packet(
            src=self.controller_id, dst=self.actuator_id, kind=COMMAND,
            size_bytes=self.packet_bytes, loop_id=self.loop_id,
            command_value=u, period=packet.period,
            release_us=packet.release_us, deadline_us=packet.deadline_us)
        if self.compute_delay_us:
            self.sim.schedule_in(self.compute_delay_us,
                                 lambda: self.medium.submit(command),
                                 "compute_done", self.controller_id)
        else:
            self.medium.submit(command)

    # -- actuator -------------------------------------------------------------

    def _on_command(self, packet: Packet) -> None:
        if packet.kind != COMMAND or not self.active:
            return
        now = self.sim.now
        self._sync_plant(now)
        self.plant.set_input(packet.command_value)
        self.trace.add_output(now, self.reference.value(now),
                              self.plant.output(), self.plant.u_held)
        if now <= packet.deadline_us:
            if self.report_over_medium:
                self.medium.submit(Packet(
                    src=self.actuator_id, dst=self.sensor_id, kind=REPORT,
                    size_bytes=self.packet_bytes, loop_id=self.loop_id))
            else:
                # direct side channel: actuator and sensor of one loop are
                # assumed to reach each other without using the medium
                self.success_count += 1

    # -- shared plant bookkeeping ----------------------------------------------

    def _sync_plant(self, t_us: int) -> float:
        """Lazily integrate the plant up to t_us and record the output row."""
        gap = t_us - self.plant_t_us
        if gap > 0:
            if not self.frozen:
                self.plant.step_us(gap)
            self.plant_t_us = t_us
        y = self.plant.output()
        if abs(y) > self.divergence_bound:
            self.trace.diverged = True
        if not self.frozen and (abs(self.plant.x0) > FREEZE_LIMIT
                                or abs(self.plant.x1) > FREEZE_LIMIT
                                or not math.isfinite(y)):
            self.frozen = True
        self.trace.add_output(t_us, self.reference.value(t_us), y, self.plant.u_held)
        return y


class InterferenceSource:
    """Non-control node that offers periodic load inside a time window."""

    def __init__(self, sim: Simulator, medium: Medium, index: int, *,
                 period: float, packet_bytes: int, window: list[float],
                 rng_factory):
        self.sim = sim
        self.medium = medium
        self.node_id = f"interferer{index}"
        self.sink_id = f"interferer{index}.sink"
        self.period_us = to_us(period)
        self.packet_bytes = packet_bytes
        self.window_end_us = to_us(window[1])
        medium.attach(self.node_id, rng_factory(self.node_id))
        medium.attach(self.sink_id)
        start_us = to_us(window[0])
        if start_us < self.window_end_us:
            sim.schedule_at(start_us, self._on_tick, "interfere", self.node_id)

    def _on_tick(self) -> None:
        now = self.sim.now
        self.medium.submit(Packet(src=self.node_id, dst=self.sink_id,
                                  kind=INTERFERENCE, size_bytes=self.packet_bytes))
        nxt = now + self.period_us
        if nxt < self.window_end_us:
            self.sim.schedule_at(nxt, self._on_tick, "interfere", self.node_id)
