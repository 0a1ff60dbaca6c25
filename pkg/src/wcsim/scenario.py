"""Declarative scenario description: validation, JSON round-trip, built-ins.

A scenario file is one self-contained JSON document whose keys mirror the
dataclasses below; omitted keys take the documented defaults.  Three
built-in scenarios cover the canonical experiments: a system
reconfiguration that doubles the number of active loops mid-run, and two
radio-interference variants.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .medium import ChannelParams
from .nodes import ReferenceSpec, SCHEME_ADAPTIVE, SCHEME_FIXED
from .sampler import SamplerParams

BUILTIN_NAMES = ("reconfig", "interference-slight", "interference-severe")


class ScenarioError(ValueError):
    """Scenario file failed validation; the message names the offending field."""


@dataclass
class LoopSpec:
    loop_id: int
    plant_num: list[float] = field(default_factory=lambda: [1.0])
    plant_den: list[float] = field(default_factory=lambda: [0.5, 6.0, 10.0])
    plant_dt: float = 1e-4
    initial_period: float = 0.010
    sampler: SamplerParams = field(default_factory=SamplerParams)
    reference: ReferenceSpec = field(default_factory=ReferenceSpec)
    windows: list[list[float]] = field(default_factory=list)
    compute_delay: float = 0.0


@dataclass
class InterfererSpec:
    period: float
    packet_bytes: int = 32
    window: list[float] = field(default_factory=lambda: [0.0, 0.0])


@dataclass
class ScenarioSpec:
    name: str
    duration: float
    loops: list[LoopSpec]
    interferers: list[InterfererSpec] = field(default_factory=list)
    channel: ChannelParams = field(default_factory=ChannelParams)
    scheme: str = SCHEME_ADAPTIVE
    seed: int = 1
    packet_bytes: int = 32
    report_over_medium: bool = False
    divergence_bound: float = 1e3
    output_prefix: str = ""


def builtin(name: str) -> ScenarioSpec:
    """One of the canonical scenarios, fully populated with defaults."""
    if name == "reconfig":
        loops = [_default_loop(1, [[0.0, 18.0]]),
                 _default_loop(2, [[0.0, 18.0]]),
                 _default_loop(3, [[6.0, 12.0]]),
                 _default_loop(4, [[6.0, 12.0]])]
        return ScenarioSpec(name=name, duration=18.0, loops=loops)
    if name in ("interference-slight", "interference-severe"):
        period = 0.010 if name == "interference-slight" else 0.008
        loops = [_default_loop(1, [[0.0, 18.0]]),
                 _default_loop(2, [[0.0, 18.0]])]
        interferers = [InterfererSpec(period=period, window=[6.0, 12.0]),
                       InterfererSpec(period=period, window=[6.0, 12.0])]
        return ScenarioSpec(name=name, duration=18.0, loops=loops,
                            interferers=interferers)
    raise ScenarioError(
        f"unknown scenario {name!r}; valid names: {', '.join(BUILTIN_NAMES)}")


def _default_loop(loop_id: int, windows: list[list[float]]) -> LoopSpec:
    return LoopSpec(loop_id=loop_id, windows=windows)


# -- JSON round-trip -------------------------------------------------------


def to_dict(spec: ScenarioSpec) -> dict:
    return dataclasses.asdict(spec)


def dumps(spec: ScenarioSpec) -> str:
    return json.dumps(to_dict(spec), indent=2, sort_keys=True) + "\n"


def save(spec: ScenarioSpec, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(spec))


def from_dict(raw: dict) -> ScenarioSpec:
    """Build and validate a spec from a plain dict, filling every default."""
    try:
        spec = _build(raw)
    except (TypeError, KeyError) as exc:
        raise ScenarioError(f"malformed scenario: {exc}") from exc
    validate(spec)
    return spec


def load(path: str) -> ScenarioSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: not valid JSON ({exc})") from exc
    return from_dict(raw)


def _build(raw: dict) -> ScenarioSpec:
    known = {f.name for f in dataclasses.fields(ScenarioSpec)}
    unknown = set(raw) - known
    if unknown:
        raise ScenarioError(f"unknown scenario field(s): {', '.join(sorted(unknown))}")
    kwargs = dict(raw)
    kwargs["loops"] = [_build_sub(LoopSpec, item, f"loops[{i}]",
                                  nested={"sampler": SamplerParams,
                                          "reference": ReferenceSpec})
                       for i, item in enumerate(raw.get("loops", []))]
    kwargs["interferers"] = [_build_sub(InterfererSpec, item, f"interferers[{i}]")
                             for i, item in enumerate(raw.get("interferers", []))]
    if "channel" in raw:
        kwargs["channel"] = _build_sub(ChannelParams, raw["channel"], "channel")
    return ScenarioSpec(**kwargs)


def _build_sub(cls, raw: dict, where: str, nested: dict | None = None):
    if not isinstance(raw, dict):
        raise ScenarioError(f"{where}: expected an object, got {type(raw).__name__}")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ScenarioError(f"{where}: unknown field(s) {', '.join(sorted(unknown))}")
    kwargs = dict(raw)
    for key, sub_cls in (nested or {}).items():
        if key in kwargs:
            kwargs[key] = _build_sub(sub_cls, kwargs[key], f"{where}.{key}")
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


# -- validation --------------------------------------------------------------


def validate(spec: ScenarioSpec) -> None:
    _require(spec.duration > 0, "duration must be positive")
    _require(bool(spec.loops), "loops must contain at least one loop")
    _require(spec.scheme in (SCHEME_FIXED, SCHEME_ADAPTIVE),
             f"scheme must be '{SCHEME_FIXED}' or '{SCHEME_ADAPTIVE}'")
    ch = spec.channel
    _require(ch.bitrate > 0, "channel.bitrate must be positive")
    _require(0 <= ch.min_be <= ch.max_be, "channel.min_be must satisfy 0 <= min_be <= max_be")
    _require(0.0 <= ch.loss_prob <= 1.0, "channel.loss_prob must lie in [0, 1]")
    _require(ch.backoff_unit > 0, "channel.backoff_unit must be positive")
    _require(ch.max_csma_backoffs >= 0, "channel.max_csma_backoffs must be non-negative")
    _require(ch.mac_retries >= 0, "channel.mac_retries must be non-negative")
    seen = set()
    for i, loop in enumerate(spec.loops):
        where = f"loops[{i}]"
        _require(loop.loop_id not in seen, f"{where}.loop_id {loop.loop_id} is duplicated")
        seen.add(loop.loop_id)
        s = loop.sampler
        _require(0.0 < s.forgetting <= 1.0, f"{where}.sampler.forgetting must lie in (0, 1]")
        _require(0.0 <= s.target_miss_ratio <= 1.0,
                 f"{where}.sampler.target_miss_ratio must lie in [0, 1]")
        _require(0 < s.h_min < s.h_max, f"{where}.sampler requires 0 < h_min < h_max")
        _require(s.interval > 0, f"{where}.sampler.interval must be positive")
        _require(s.h_min <= loop.initial_period <= s.h_max,
                 f"{where}.initial_period must lie in [h_min, h_max]")
        _require(loop.compute_delay >= 0, f"{where}.compute_delay must be non-negative")
        _require(loop.reference.wave_period > 0, f"{where}.reference.wave_period must be positive")
        last_end = None
        for j, window in enumerate(loop.windows):
            w = f"{where}.windows[{j}]"
            _require(len(window) == 2 and window[0] < window[1],
                     f"{w} must be [start, end) with start < end")
            _require(window[0] >= 0, f"{w} must not start before t=0")
            if last_end is not None:
                _require(window[0] >= last_end, f"{w} overlaps the previous window")
            last_end = window[1]
    for i, intf in enumerate(spec.interferers):
        where = f"interferers[{i}]"
        _require(intf.period > 0, f"{where}.period must be positive")
        _require(intf.packet_bytes > 0, f"{where}.packet_bytes must be positive")
        _require(len(intf.window) == 2 and intf.window[0] <= intf.window[1],
                 f"{where}.window must be [start, end)")
    _require(spec.packet_bytes > 0, "packet_bytes must be positive")
    _require(spec.divergence_bound > 0, "divergence_bound must be positive")


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ScenarioError(message)
