"""
The read/write simulator and its ground-truth wall-clock oracle.
"""

from .compute import ConstantCompute, PerTokenCompute, SeededUniformCompute, parse_compute
from .engine import (
    CompletionGap,
    completion_gap,
    concat_scale,
    draw_durations,
    simulate,
    wall_clock_oracle,
)
from .interface import (
    ComputeKind,
    ComputeModel,
    InvalidCompute,
    InvalidPolicy,
    Policy,
    SimulationError,
    SimulationOutcome,
)
from .policy import WaitKStrideN

__all__ = [
    "CompletionGap",
    "ComputeKind",
    "ComputeModel",
    "ConstantCompute",
    "InvalidCompute",
    "InvalidPolicy",
    "PerTokenCompute",
    "Policy",
    "SeededUniformCompute",
    "SimulationError",
    "SimulationOutcome",
    "WaitKStrideN",
    "completion_gap",
    "concat_scale",
    "draw_durations",
    "parse_compute",
    "simulate",
    "wall_clock_oracle",
]
