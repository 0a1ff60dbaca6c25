"""Discrete-event simulator for multi-loop wireless control systems.

Several feedback loops close over one shared CSMA/CA channel.  Sensors can
run a fixed sampling period (tt) or adapt it at runtime so that each loop's
deadline miss ratio is held near a target (ftt).
"""

from .engine import Simulator, SimulationError, derive_rng, to_seconds, to_us
from .medium import ChannelParams, Medium, Packet, tx_duration
from .metrics import LoopTrace, export_run, iae, mean_miss_ratio, summarize
from .nodes import (ControlLoop, InterferenceSource, PidController,
                    ReferenceSpec, SCHEME_ADAPTIVE, SCHEME_FIXED)
from .plant import LtiPlant
from .run import RunResult, run_scenario
from .sampler import (SamplerParams, SamplerState, adapt_period,
                      filtered_error, measure_miss_ratio)
from .scenario import (BUILTIN_NAMES, InterfererSpec, LoopSpec, ScenarioError,
                       ScenarioSpec, builtin, load, save)

__version__ = "0.1.0"
