"""
Core pipelines of the splinefuse package.
"""

from .pipeline import (
    FusionPipeline,
    FusionResult,
    OrientationFitResult,
    batch_fit,
    evaluate_groundtruth,
    fit_orientation,
    run_estimator,
)

__all__ = [
    "FusionPipeline",
    "FusionResult",
    "OrientationFitResult",
    "batch_fit",
    "evaluate_groundtruth",
    "fit_orientation",
    "run_estimator",
]
