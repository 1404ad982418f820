"""Discrete-time UDE controller–observer for a two-link manipulator."""

from .discretize import DiscreteSystem, build_system, manipulator_system, zoh_discretize
from .manipulator import ACTUAL, UNCERTAIN, ManipulatorParams
from .simkern import Scenario, SimTrace, compute_metrics, run_closed_loop

__all__ = [
    "ACTUAL",
    "UNCERTAIN",
    "DiscreteSystem",
    "ManipulatorParams",
    "Scenario",
    "SimTrace",
    "build_system",
    "compute_metrics",
    "manipulator_system",
    "run_closed_loop",
    "zoh_discretize",
]

__version__ = "0.1.0"
