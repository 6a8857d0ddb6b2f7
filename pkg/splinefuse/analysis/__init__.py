"""
Accuracy metrics, Jacobian checks and result formatting.
"""

from .gradcheck import SUITES, GradcheckResult, run_gradcheck
from .metrics import (
    EvalReport,
    associate,
    evaluate_ape,
    orientation_errors,
    orientation_rmse,
    rmse,
)
from .utils import format_mean_sd, format_metric, render_table

__all__ = [
    # Metrics
    "associate",
    "rmse",
    "orientation_errors",
    "orientation_rmse",
    "EvalReport",
    "evaluate_ape",
    # Jacobian checks
    "SUITES",
    "GradcheckResult",
    "run_gradcheck",
    # Utilities
    "format_mean_sd",
    "format_metric",
    "render_table",
]
