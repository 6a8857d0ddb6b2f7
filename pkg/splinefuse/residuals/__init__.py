"""
Residuals of UWB ranging, inertial and orientation measurements.

Each residual function evaluates a whole batch of one measurement kind
against a window state and returns a :class:`ResidualBlock` holding the
residuals, ambient Jacobians with respect to the supporting knots and, where
applicable, with respect to the calibration.
"""

from ..config import NoiseModel
from .block import ResidualBlock
from .imu import accel_residual, bias_residual, consecutive_pairs, gyro_residual
from .measurements import (
    AnchorMap,
    Calibration,
    ImuBatch,
    ImuMeasurement,
    MeasurementSet,
    OrientationBatch,
    OrientationMeasurement,
    TdoaBatch,
    ToaBatch,
    UwbTdoaMeasurement,
    UwbToaMeasurement,
)
from .orientation import orientation_residual
from .uwb import tag_in_uwb, tdoa_residual, toa_residual
from .weighting import apply_gate, gate_outlier, whiten, whitening_matrix

__all__ = [
    "NoiseModel",
    "ResidualBlock",
    "AnchorMap",
    "Calibration",
    "ImuMeasurement",
    "UwbToaMeasurement",
    "UwbTdoaMeasurement",
    "OrientationMeasurement",
    "ImuBatch",
    "ToaBatch",
    "TdoaBatch",
    "OrientationBatch",
    "MeasurementSet",
    "tag_in_uwb",
    "toa_residual",
    "tdoa_residual",
    "accel_residual",
    "gyro_residual",
    "bias_residual",
    "consecutive_pairs",
    "orientation_residual",
    "whiten",
    "whitening_matrix",
    "gate_outlier",
    "apply_gate",
]
