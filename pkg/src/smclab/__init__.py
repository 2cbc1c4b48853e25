"""Sliding-mode control simulation lab."""
from .controllers import ControllerSingularityError, ControllerSpec, ControlOutput
from .plants import DisturbanceSpec, Plant
from .reaching import ReachingLawSpec
from .sim import BACKEND, Metrics, Scenario, Trajectory, compare, compute_metrics, simulate
from .surfaces import ErrorState, ReferenceSignal, SurfaceGains

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ControlOutput", "ControllerSingularityError", "ControllerSpec",
    "DisturbanceSpec", "ErrorState", "Metrics", "Plant", "ReachingLawSpec",
    "ReferenceSignal", "Scenario", "SurfaceGains", "Trajectory", "compare",
    "compute_metrics", "simulate",
]
