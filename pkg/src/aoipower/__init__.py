"""Power-minimal sampling, sub-channel assignment and power allocation under
per-sensor average AoI limits, with a slotted simulator around it."""
from ._backend import BACKEND
from .channel import ChannelStream, FadingParams, Topology, draw_channel, large_scale_gain, load_topology
from .config import ConfigError, SystemConfig, config_from_dict, load_config
from .controller import DriftPlusPenalty, FixedRate, Schedule, SlotParams, default_baseline_schedule, run_slot
from .harness import RunMetrics, Trace, compare_solvers, metrics_from_trace, run_simulation, sweep
from .solver import (
    GuardError,
    InfeasibleError,
    SlotDecision,
    SlotProblem,
    count_exhaustive_assignments,
    count_sampling_vectors,
    evaluate_sampling,
    greedy_assign,
    solve_exhaustive,
    solve_suboptimal,
    waterfill,
)
from .state import NetworkState, lyapunov, sampling_weight, step_aoi, step_queue

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ChannelStream",
    "ConfigError",
    "DriftPlusPenalty",
    "FadingParams",
    "FixedRate",
    "GuardError",
    "InfeasibleError",
    "NetworkState",
    "RunMetrics",
    "Schedule",
    "SlotDecision",
    "SlotParams",
    "SlotProblem",
    "SystemConfig",
    "Topology",
    "Trace",
    "compare_solvers",
    "config_from_dict",
    "count_exhaustive_assignments",
    "count_sampling_vectors",
    "default_baseline_schedule",
    "draw_channel",
    "evaluate_sampling",
    "greedy_assign",
    "large_scale_gain",
    "load_config",
    "load_topology",
    "lyapunov",
    "metrics_from_trace",
    "run_simulation",
    "run_slot",
    "sampling_weight",
    "solve_exhaustive",
    "solve_suboptimal",
    "step_aoi",
    "step_queue",
    "sweep",
    "waterfill",
]
