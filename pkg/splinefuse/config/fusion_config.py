"""
Configuration classes for splinefuse estimation runs.

A run is described by four sections (window lifecycle, noise model, solver
schedule and calibration initials) plus a random seed. Every section is a
dataclass with defaults; a YAML file only needs the keys it changes.
"""

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import yaml

from ..exceptions import ConfigurationError

Covariance = Union[float, List[float], List[List[float]]]


def _as_covariance(value: Covariance, dim: int, name: str) -> np.ndarray:
    """Expand a scalar variance, a diagonal or a full matrix to ``dim x dim``."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(dim)
    if arr.shape == (dim,):
        return np.diag(arr)
    if arr.shape == (dim, dim):
        return arr
    raise ConfigurationError(
        f"Covariance must be a scalar, a {dim}-vector or a {dim}x{dim} matrix",
        parameter=name,
        value=value,
    )


def _plain(value: Any) -> Any:
    """Convert numpy scalars and arrays to plain Python for YAML output."""
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass
class WindowConfig:
    """
    Sliding-window lifecycle settings.

    The calibration is estimated only by growing windows of at least
    ``calib_min_knots`` knots.
    """

    knot_dt: float = 0.1
    window_knots: int = 100
    calib_enabled: bool = True
    gate_threshold: Optional[float] = 0.5
    gate_warmup: int = 50
    imu_downsample: int = 1
    uwb_downsample: int = 1
    use_imu: bool = True
    calib_min_knots: int = 10

    def validate(self) -> None:
        if not self.knot_dt > 0:
            raise ConfigurationError(
                "Knot interval must be positive", parameter="knot_dt", value=self.knot_dt
            )
        if self.window_knots < 8:
            raise ConfigurationError(
                "Window must hold at least 8 knots",
                parameter="window_knots",
                value=self.window_knots,
            )
        for name in ("imu_downsample", "uwb_downsample"):
            if getattr(self, name) < 1:
                raise ConfigurationError(
                    "Downsample factor must be at least 1",
                    parameter=name,
                    value=getattr(self, name),
                )
        if self.gate_threshold is not None and not self.gate_threshold > 0:
            raise ConfigurationError(
                "Gate threshold must be positive",
                parameter="gate_threshold",
                value=self.gate_threshold,
            )
        if self.gate_warmup < 0:
            raise ConfigurationError(
                "Gate warmup cannot be negative",
                parameter="gate_warmup",
                value=self.gate_warmup,
            )
        if self.calib_min_knots < 4:
            raise ConfigurationError(
                "Calibration needs at least 4 knots",
                parameter="calib_min_knots",
                value=self.calib_min_knots,
            )


@dataclass
class NoiseModel:
    """
    Measurement covariances and per-sensor weights of the window objective.

    Covariances may be given as a scalar variance, a diagonal, or a full
    matrix. ``cov_bias`` is the covariance of the bias change between two
    consecutive IMU samples; ``cov_orientation`` applies to direct
    orientation measurements in tangent (half-angle) units.
    """

    cov_uwb: float = 0.01
    cov_accel: Covariance = 0.0025
    cov_gyro: Covariance = 2.5e-5
    cov_bias: Covariance = 1e-6
    cov_orientation: Covariance = 2.5e-5
    weight_uwb: float = 1.0
    weight_imu: float = 1.0

    _DIMS = {"toa": 1, "tdoa": 1, "accel": 3, "gyro": 3, "bias": 6, "orientation": 3}

    def covariance(self, kind: str) -> np.ndarray:
        """Covariance matrix of residual ``kind``."""
        if kind not in self._DIMS:
            raise ConfigurationError("Unknown residual kind", parameter="kind", value=kind)
        source = {
            "toa": self.cov_uwb,
            "tdoa": self.cov_uwb,
            "accel": self.cov_accel,
            "gyro": self.cov_gyro,
            "bias": self.cov_bias,
            "orientation": self.cov_orientation,
        }[kind]
        return _as_covariance(source, self._DIMS[kind], f"cov_{kind}")

    def weight(self, kind: str) -> float:
        if kind in ("toa", "tdoa"):
            return self.weight_uwb
        if kind in ("accel", "gyro", "bias"):
            return self.weight_imu
        return 1.0

    def validate(self) -> None:
        for name in ("weight_uwb", "weight_imu"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(
                    "Weights must be positive", parameter=name, value=getattr(self, name)
                )
        for kind in self._DIMS:
            cov = self.covariance(kind)
            if not np.allclose(cov, cov.T) or np.any(np.linalg.eigvalsh(cov) <= 0):
                raise ConfigurationError(
                    "Covariance must be symmetric positive definite",
                    parameter=f"cov_{kind}",
                    value=cov.tolist(),
                )


@dataclass
class SolverConfig:
    """Levenberg-Marquardt schedule and stopping rules."""

    max_iters: int = 20
    lambda_init: float = 1e-4
    lambda_min: float = 1e-12
    lambda_up: float = 10.0
    lambda_down: float = 0.5
    lambda_max: float = 1e12
    cost_tol: float = 1e-8
    step_tol: float = 1e-10
    calib_condition_max: float = 1e8

    def validate(self) -> None:
        if self.max_iters < 1:
            raise ConfigurationError(
                "max_iters must be positive", parameter="max_iters", value=self.max_iters
            )
        if self.lambda_init < 0:
            raise ConfigurationError(
                "lambda_init cannot be negative",
                parameter="lambda_init",
                value=self.lambda_init,
            )
        if not self.lambda_up > 1:
            raise ConfigurationError(
                "lambda_up must exceed 1", parameter="lambda_up", value=self.lambda_up
            )
        if not 0 < self.lambda_down < 1:
            raise ConfigurationError(
                "lambda_down must lie in (0, 1)",
                parameter="lambda_down",
                value=self.lambda_down,
            )
        positive = (
            "lambda_min", "lambda_max", "cost_tol", "step_tol", "calib_condition_max"
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigurationError(
                    f"{name} must be positive",
                    parameter=name,
                    value=getattr(self, name),
                )
        if self.lambda_min > self.lambda_max:
            raise ConfigurationError(
                "lambda_min cannot exceed lambda_max",
                parameter="lambda_min",
                value=self.lambda_min,
            )


@dataclass
class CalibrationConfig:
    """Initial extrinsic, gravity and tag-offset values."""

    q_WU: List[float] = field(default_factory=lambda: [1.0, 0.0, 0.0, 0.0])
    t_WU: List[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    g_dir: List[float] = field(default_factory=lambda: [0.0, 0.0, 1.0])
    g_mag: float = 9.81
    tag_offset: List[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])

    def validate(self) -> None:
        for name, size in (("q_WU", 4), ("t_WU", 3), ("g_dir", 3), ("tag_offset", 3)):
            value = np.asarray(getattr(self, name), dtype=float)
            if value.shape != (size,) or not np.all(np.isfinite(value)):
                raise ConfigurationError(
                    f"{name} must be a finite {size}-vector",
                    parameter=name,
                    value=getattr(self, name),
                )
        for name in ("q_WU", "g_dir"):
            if np.linalg.norm(getattr(self, name)) < 1e-9:
                raise ConfigurationError(
                    f"{name} must be non-zero", parameter=name, value=getattr(self, name)
                )
        if not self.g_mag > 0:
            raise ConfigurationError(
                "Gravity magnitude must be positive", parameter="g_mag", value=self.g_mag
            )


@dataclass
class FusionConfig:
    """Master configuration of an estimation run."""

    window: WindowConfig = field(default_factory=WindowConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    solver: SolverConfig = field(default_factory=SolverConfig)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    seed: int = 0

    _SECTIONS = {
        "window": WindowConfig,
        "noise": NoiseModel,
        "solver": SolverConfig,
        "calibration": CalibrationConfig,
    }

    def validate(self) -> "FusionConfig":
        """Check every section; returns self so it can be chained after loading."""
        self.window.validate()
        self.noise.validate()
        self.solver.validate()
        self.calibration.validate()
        return self

    @classmethod
    def from_yaml(cls, config_path: Union[str, Path]) -> "FusionConfig":
        """Load configuration from YAML file"""
        config_file = Path(config_path)
        if not config_file.exists():
            raise FileNotFoundError(f"Configuration file not found: {config_path}")

        with open(config_file, "r") as f:
            config_data = yaml.safe_load(f) or {}

        if not isinstance(config_data, dict):
            raise ConfigurationError(
                "Configuration file must contain a mapping", parameter=str(config_path)
            )
        return cls._from_dict(config_data)

    @classmethod
    def _from_dict(cls, config_data: Dict[str, Any]) -> "FusionConfig":
        """Create FusionConfig from dictionary"""
        unknown = set(config_data) - set(cls._SECTIONS) - {"seed"}
        if unknown:
            raise ConfigurationError(
                "Unknown configuration section", parameter=", ".join(sorted(unknown))
            )

        sections = {}
        for name, section_cls in cls._SECTIONS.items():
            section_data = config_data.get(name) or {}
            allowed = {f.name for f in fields(section_cls)}
            extra = set(section_data) - allowed
            if extra:
                raise ConfigurationError(
                    f"Unknown keys in section '{name}'",
                    parameter=", ".join(sorted(extra)),
                )
            sections[name] = section_cls(**section_data)

        return cls(seed=int(config_data.get("seed", 0)), **sections)

    def to_dict(self) -> Dict[str, Any]:
        config_dict = {name: _plain(asdict(getattr(self, name))) for name in self._SECTIONS}
        config_dict["seed"] = int(self.seed)
        return config_dict

    def to_yaml(self, output_path: Union[str, Path]) -> None:
        """Save configuration to YAML file"""
        with open(output_path, "w") as f:
            yaml.dump(self.to_dict(), f, default_flow_style=False, indent=2)
