"""Sampling-period adaptation driven by the measured deadline miss ratio.

Each sensor runs this independently: every invocation interval the miss
ratio of the elapsed interval is measured, low-pass filtered against the
previous measurement, and a velocity-form PID update moves the sampling
period toward the point where the miss ratio sits at its target.  Misses
above target enlarge the period (shedding load); misses below target
shrink it (reclaiming bandwidth).
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class SamplerParams:
    kp: float = 0.007                 # seconds per unit of miss-ratio error
    ki: float = 0.006
    kd: float = 0.003
    target_miss_ratio: float = 0.10
    forgetting: float = 0.7           # weight of the newest measurement in the filter
    interval: float = 0.5             # seconds between adaptations
    h_max: float = 0.030              # period bounds, seconds
    h_min: float = 0.002


@dataclass
class SamplerState:
    """Adaptation memory of one sensor."""
    h: float                          # current period, seconds
    err_prev: float = 0.0
    err_prev2: float = 0.0
    miss_ratio_prev: float = 0.0
    ticks: int = 0


def measure_miss_ratio(periods: int, successes: int, previous: float) -> float:
    """Fraction of released samples in the interval that missed their deadline.

    An interval with no released samples holds the previous measurement, so
    a freshly (re)activated loop does not see a spurious zero.  Late success
    reports can spill across interval boundaries, hence the clamp.
    """
    if periods < 0 or successes < 0:
        raise ValueError("counters must be non-negative")
    if periods == 0:
        return previous
    return min(1.0, max(0.0, 1.0 - successes / periods))


def filtered_error(miss_ratio: float, state: SamplerState, params: SamplerParams) -> float:
    """Target minus the low-pass filtered miss ratio estimate."""
    estimate = params.forgetting * miss_ratio + (1.0 - params.forgetting) * state.miss_ratio_prev
    return params.target_miss_ratio - estimate


def adapt_period(err: float, state: SamplerState, params: SamplerParams) -> float:
    """One velocity-form PID update of the period; clamps to [h_min, h_max].

    The increment is subtracted, so a negative error (miss ratio above
    target) grows the period.
    """
    delta = (params.kp * (err - state.err_prev)
             + params.ki * err
             + params.kd * (err - 2.0 * state.err_prev + state.err_prev2))
    h_new = min(max(state.h - delta, params.h_min), params.h_max)
    state.err_prev2 = state.err_prev
    state.err_prev = err
    state.h = h_new
    state.ticks += 1
    return h_new
