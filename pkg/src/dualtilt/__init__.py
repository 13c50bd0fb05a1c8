"""Dual-tilt hexarotor simulation with dynamic control allocation."""

from .actuation import Airframe, SaturationBox
from .allocator import AllocatorParams, ObjectiveSpec
from .analysis import compare_runs, cosine_fit, objective_series, table_report
from .config import load_config, parse_config, resolve_config
from .controller import ControllerGains
from .dynamics import PlatformParams, PlatformState
from .simulation import RunRecord, Scenario, run
from .trajectory import CircleTrajectory, HoverReference, StepReference

__all__ = [
    "Airframe", "SaturationBox", "AllocatorParams", "ObjectiveSpec", "compare_runs",
    "cosine_fit", "objective_series", "table_report", "load_config", "parse_config",
    "resolve_config", "ControllerGains", "PlatformParams", "PlatformState", "RunRecord",
    "Scenario", "run", "CircleTrajectory", "HoverReference", "StepReference",
]
