"""
splinefuse: continuous-time UWB/IMU fusion with cubic B-splines

Sliding-window Levenberg-Marquardt estimation of a uniform cumulative
cubic B-spline trajectory (unit-quaternion orientation, Euclidean position
and IMU biases) from UWB ranging and inertial measurements, with online
estimation of the IMU-to-UWB extrinsic and the gravity direction.

License: MIT
"""

__version__ = "0.2.0"
__author__ = "splinefuse Contributors"

# Custom exceptions
from .exceptions import (
    AntipodalInput,
    CalibrationUnobservable,
    ConfigurationError,
    DegenerateGeometry,
    EstimatorStateError,
    NoMeasurements,
    NonMonotonicTimestamp,
    NonSPDCovariance,
    NoOverlap,
    OutOfRange,
    OutOfWindow,
    SchemaError,
    SingularSystem,
    SplineFusionError,
    UnknownAnchor,
    validate_required_columns,
)

# Configuration
from .config import (
    CalibrationConfig,
    FusionConfig,
    NoiseModel,
    SolverConfig,
    WindowConfig,
    get_orientation_fit_config,
    get_reference_config,
)

# Measurements and estimator
from .residuals import (
    AnchorMap,
    Calibration,
    ImuMeasurement,
    MeasurementSet,
    OrientationMeasurement,
    UwbTdoaMeasurement,
    UwbToaMeasurement,
)
from .estimator import Phase, SplineFusionEstimator, StateSample, WindowState

# Pipelines
from .core import FusionPipeline, batch_fit, fit_orientation, run_estimator

# Subpackages
from . import analysis, data, geometry, solver, spline

__all__ = [
    # Estimator
    "SplineFusionEstimator",
    "WindowState",
    "StateSample",
    "Phase",
    # Pipelines
    "FusionPipeline",
    "run_estimator",
    "batch_fit",
    "fit_orientation",
    # Measurements
    "AnchorMap",
    "Calibration",
    "ImuMeasurement",
    "UwbToaMeasurement",
    "UwbTdoaMeasurement",
    "OrientationMeasurement",
    "MeasurementSet",
    # Configuration
    "FusionConfig",
    "WindowConfig",
    "NoiseModel",
    "SolverConfig",
    "CalibrationConfig",
    "get_reference_config",
    "get_orientation_fit_config",
    # Exceptions
    "SplineFusionError",
    "AntipodalInput",
    "OutOfRange",
    "OutOfWindow",
    "UnknownAnchor",
    "DegenerateGeometry",
    "NonSPDCovariance",
    "SingularSystem",
    "NoMeasurements",
    "NonMonotonicTimestamp",
    "CalibrationUnobservable",
    "SchemaError",
    "NoOverlap",
    "ConfigurationError",
    "EstimatorStateError",
    "validate_required_columns",
    # Subpackages
    "analysis",
    "data",
    "geometry",
    "solver",
    "spline",
    # Metadata
    "__version__",
]
