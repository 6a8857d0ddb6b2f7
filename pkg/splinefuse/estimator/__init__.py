"""
Sliding-window estimator and continuous-time state queries.
"""

from .session import IDLE_KNOTS, SplineFusionEstimator
from .window import (
    KnotState,
    Phase,
    StateSample,
    WindowState,
    sample_arrays,
    samples_from_arrays,
)

__all__ = [
    "IDLE_KNOTS",
    "SplineFusionEstimator",
    "KnotState",
    "Phase",
    "StateSample",
    "WindowState",
    "sample_arrays",
    "samples_from_arrays",
]
