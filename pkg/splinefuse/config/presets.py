"""
Preset configurations.

The reference preset mirrors the 100-knot, 10 Hz window used for UWB/IMU
tracking; the orientation preset is tuned for batch SO(3) fitting against
orientation and gyroscope samples with 1e-2 noise.
"""

from .fusion_config import FusionConfig, NoiseModel, SolverConfig, WindowConfig


def get_reference_config() -> FusionConfig:
    """Return the reference UWB/IMU sliding-window configuration."""
    return FusionConfig(
        window=WindowConfig(knot_dt=0.1, window_knots=100, gate_threshold=0.5),
        noise=NoiseModel(
            cov_uwb=0.01,
            cov_accel=0.0025,
            cov_gyro=2.5e-5,
            cov_bias=1e-6,
        ),
        solver=SolverConfig(),
    )


def get_orientation_fit_config(
    orientation_sigma: float = 1e-2, gyro_sigma: float = 1e-2
) -> FusionConfig:
    """
    Return a configuration for batch orientation fitting.

    Orientation noise is given in tangent units, the scale of the
    orientation residual, so its variance is used as is.
    """
    orientation_var = max(orientation_sigma**2, 1e-16)
    gyro_var = max(gyro_sigma**2, 1e-16)
    return FusionConfig(
        window=WindowConfig(calib_enabled=False, gate_threshold=None),
        noise=NoiseModel(cov_orientation=orientation_var, cov_gyro=gyro_var),
        solver=SolverConfig(max_iters=20),
    )
