"""
Configuration system for splinefuse.

Dataclass sections with defaults, loaded from and saved to YAML.
"""

from .fusion_config import (
    CalibrationConfig,
    FusionConfig,
    NoiseModel,
    SolverConfig,
    WindowConfig,
)
from .presets import get_orientation_fit_config, get_reference_config

__all__ = [
    "FusionConfig",
    "WindowConfig",
    "NoiseModel",
    "SolverConfig",
    "CalibrationConfig",
    "get_reference_config",
    "get_orientation_fit_config",
]
