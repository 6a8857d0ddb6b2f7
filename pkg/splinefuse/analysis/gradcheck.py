"""
Finite-difference checks of every analytic Jacobian.

Quaternion arguments are perturbed on the manifold (``q ⊗ Exp(delta)``) and
compared with the analytic Jacobian lifted by :func:`quat.tangent_basis`;
Euclidean arguments are perturbed additively. Each suite returns one error
per random instance: the Frobenius norm of the difference divided by
``max(1, |J_fd|)``.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np

from ..config import NoiseModel
from ..estimator.window import WindowState
from ..geometry import quaternion as quat
from ..residuals import (
    AnchorMap,
    Calibration,
    ImuBatch,
    MeasurementSet,
    OrientationBatch,
    TdoaBatch,
    ToaBatch,
)
from ..solver import ParameterLayout, dense_jacobian, residual_blocks, retract
from ..spline import (
    EuclideanSpline,
    KnotGrid,
    QuaternionSpline,
    interp_acc,
    interp_angvel,
    interp_quat,
    interp_vec,
    interp_vel,
    jac_acc_knots,
    jac_angvel_knots,
    jac_quat_knots,
    jac_vec_knots,
    jac_vel_knots,
    locate,
)

logger = logging.getLogger(__name__)

EPS = 1e-6
TOLERANCE = 1e-5


@dataclass
class GradcheckResult:
    name: str
    instances: int
    max_error: float
    tolerance: float = TOLERANCE

    @property
    def passed(self) -> bool:
        return bool(self.max_error < self.tolerance)


def scaled_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """Per-instance ``|A - N| / max(1, |N|)`` over all but the leading axis."""
    n = analytic.shape[0]
    diff = np.linalg.norm((analytic - numeric).reshape(n, -1), axis=1)
    scale = np.maximum(np.linalg.norm(numeric.reshape(n, -1), axis=1), 1.0)
    return diff / scale


def random_quaternions(rng: np.random.Generator, n: int) -> np.ndarray:
    return quat.normalize(rng.standard_normal((n, 4)))


def random_rotation_knots(rng: np.random.Generator, count: int, step: float = 0.3) -> np.ndarray:
    """Random walk of unit quaternions with tangent steps of size ``step``."""
    steps = quat.exp_map(step * rng.standard_normal((count - 1, 3)))
    knots = [random_quaternions(rng, 1)[0]]
    for s in steps:
        knots.append(quat.hamilton(knots[-1], s))
    return np.stack(knots)


def _tangent_fd(fn: Callable, q: np.ndarray) -> np.ndarray:
    """Central differences of ``fn(q ⊗ Exp(delta))``; shape (N, out, 3)."""
    cols = []
    for d in range(3):
        step = np.zeros(3)
        step[d] = EPS
        cols.append((fn(quat.plus(q, step)) - fn(quat.plus(q, -step))) / (2 * EPS))
    return np.stack(cols, axis=-1)


# ----------------------------------------------------------------------
# Quaternion maps


def check_jac_exp(rng: np.random.Generator, instances: int) -> np.ndarray:
    v = rng.uniform(-1.5, 1.5, (instances, 3))
    cols = []
    for d in range(3):
        step = np.zeros(3)
        step[d] = EPS
        cols.append((quat.exp_map(v + step) - quat.exp_map(v - step)) / (2 * EPS))
    return scaled_error(quat.jac_exp(v), np.stack(cols, axis=-1))


def check_jac_log(rng: np.random.Generator, instances: int) -> np.ndarray:
    q = random_quaternions(rng, instances)
    q = np.where(q[:, :1] < 0, -q, q)
    analytic = quat.jac_log(q) @ quat.tangent_basis(q)
    return scaled_error(analytic, _tangent_fd(quat.log_map, q))


def check_jac_rotate(rng: np.random.Generator, instances: int) -> np.ndarray:
    q = random_quaternions(rng, instances)
    x = rng.standard_normal((instances, 3))
    analytic = quat.jac_rotate(q, x) @ quat.tangent_basis(q)
    return scaled_error(analytic, _tangent_fd(lambda r: quat.rotate(r, x), q))


# ----------------------------------------------------------------------
# Spline knot Jacobians


def _spline_setup(rng: np.random.Generator, instances: int, count: int = 8, dt: float = 0.1):
    grid = KnotGrid(0.0, dt, count)
    start, end = grid.span
    t = rng.uniform(start, end, instances)
    return grid, t, locate(grid, t)


def _knot_fd(evaluate: Callable, knots: np.ndarray, w, out: int, manifold: bool) -> np.ndarray:
    """
    Numeric derivatives of ``evaluate(knots)`` w.r.t. each supporting knot.

    Returns shape (N, 4, out, dof) with the local knot index second.
    """
    n = w.shape[0]
    dof = 3
    numeric = np.zeros((n, 4, out, dof))
    local_base = w.seg - 2
    for j in range(len(knots)):
        local = j - local_base
        rows = (local >= 0) & (local < 4)
        if not rows.any():
            continue
        for d in range(dof):
            plus, minus = knots.copy(), knots.copy()
            step = np.zeros(dof)
            step[d] = EPS
            if manifold:
                plus[j] = quat.plus(knots[j], step)
                minus[j] = quat.plus(knots[j], -step)
            else:
                plus[j] = knots[j] + step
                minus[j] = knots[j] - step
            diff = (evaluate(plus) - evaluate(minus)) / (2 * EPS)
            numeric[rows, local[rows], :, d] = diff[rows]
    return numeric


def _rotation_suite(rng, instances, value_fn, jac_fn, out):
    grid, _, w = _spline_setup(rng, instances)
    spline = QuaternionSpline(grid, random_rotation_knots(rng, grid.count))
    knots = spline.knots
    basis = quat.tangent_basis(knots[w.support()])  # (N, 4, 4, 3)
    analytic = jac_fn(spline, w) @ basis
    numeric = _knot_fd(
        lambda k: value_fn(QuaternionSpline(grid, k), w), knots, w, out, manifold=True
    )
    return scaled_error(analytic, numeric)


def check_jac_quat_knots(rng: np.random.Generator, instances: int) -> np.ndarray:
    return _rotation_suite(rng, instances, interp_quat, jac_quat_knots, 4)


def check_jac_angvel_knots(rng: np.random.Generator, instances: int) -> np.ndarray:
    return _rotation_suite(rng, instances, interp_angvel, jac_angvel_knots, 3)


def _euclidean_suite(rng, instances, value_fn, coeff_fn):
    grid, _, w = _spline_setup(rng, instances)
    knots = rng.standard_normal((grid.count, 3))
    coeff = coeff_fn(w)  # (N, 4)
    analytic = coeff[:, :, None, None] * np.eye(3)
    numeric = _knot_fd(
        lambda k: value_fn(EuclideanSpline(grid, k), w), knots, w, 3, manifold=False
    )
    return scaled_error(analytic, numeric)


def check_jac_vec_knots(rng: np.random.Generator, instances: int) -> np.ndarray:
    return _euclidean_suite(rng, instances, interp_vec, jac_vec_knots)


def check_jac_vel_knots(rng: np.random.Generator, instances: int) -> np.ndarray:
    return _euclidean_suite(rng, instances, interp_vel, jac_vel_knots)


def check_jac_acc_knots(rng: np.random.Generator, instances: int) -> np.ndarray:
    return _euclidean_suite(rng, instances, interp_acc, jac_acc_knots)


# ----------------------------------------------------------------------
# Residuals, including the calibration columns


def random_window(rng: np.random.Generator, count: int = 8, dt: float = 0.1) -> WindowState:
    """Random window with a non-trivial calibration and tag lever arm."""
    calib = Calibration(
        q_WU=random_quaternions(rng, 1)[0],
        t_WU=rng.standard_normal(3),
        g_dir=rng.standard_normal(3),
        g_mag=9.81,
        tag_offset=0.2 * rng.standard_normal(3),
    )
    return WindowState(
        grid=KnotGrid(0.0, dt, count),
        q=random_rotation_knots(rng, count),
        p=rng.standard_normal((count, 3)),
        b=0.1 * rng.standard_normal((count, 6)),
        calib=calib,
    )


def random_anchors(rng: np.random.Generator, n: int = 6) -> AnchorMap:
    return AnchorMap({f"a{i}": 5.0 * rng.standard_normal(3) for i in range(n)})


def random_measurements(
    rng: np.random.Generator, state: WindowState, kind: str, n: int, anchors: AnchorMap
) -> MeasurementSet:
    """``n`` random measurements of one residual kind inside the window."""
    start, end = state.grid.span
    t = np.sort(rng.uniform(start, end, n))
    ids = np.array(anchors.ids, dtype=object)
    if kind in ("accel", "gyro", "bias"):
        imu = ImuBatch(t, rng.standard_normal((n, 3)), rng.standard_normal((n, 3)))
        return MeasurementSet(imu=imu, imu_terms=(kind,))
    if kind == "toa":
        toa = ToaBatch(t, rng.choice(ids, n), rng.uniform(1.0, 8.0, n))
        return MeasurementSet(toa=toa, anchors=anchors)
    if kind == "tdoa":
        pairs = np.array([rng.choice(len(ids), 2, replace=False) for _ in range(n)])
        tdoa = TdoaBatch(t, ids[pairs[:, 0]], ids[pairs[:, 1]], rng.uniform(-2.0, 2.0, n))
        return MeasurementSet(tdoa=tdoa, anchors=anchors)
    if kind == "orientation":
        r = interp_quat(state.rotation, locate(state.grid, t))
        q = quat.plus(r, 0.3 * rng.standard_normal((n, 3)))
        return MeasurementSet(orientation=OrientationBatch(t, q))
    raise ValueError(f"Unknown residual kind: {kind}")


def _stacked_residual(state, measurements, noise) -> np.ndarray:
    blocks = residual_blocks(state, measurements, noise)
    return np.concatenate([b.residual.reshape(-1) for b in blocks])


def residual_errors(
    rng: np.random.Generator, kind: str, instances: int, per_window: int = 25
) -> np.ndarray:
    """
    Compare the assembled tangent Jacobian of one residual kind with
    central differences through :func:`retract`, calibration included.
    """
    noise = NoiseModel()
    errors = []
    remaining = instances
    while remaining > 0:
        n = min(per_window, remaining) + (1 if kind == "bias" else 0)
        state = random_window(rng)
        anchors = random_anchors(rng)
        measurements = random_measurements(rng, state, kind, n, anchors)
        layout = ParameterLayout(state.count, calibrating=True)
        _, analytic = dense_jacobian(state, measurements, noise, layout)

        numeric = np.zeros_like(analytic)
        for i in range(layout.dim):
            step = np.zeros(layout.dim)
            step[i] = EPS
            plus = _stacked_residual(retract(state, step, layout), measurements, noise)
            minus = _stacked_residual(retract(state, -step, layout), measurements, noise)
            numeric[:, i] = (plus - minus) / (2 * EPS)

        rows = analytic.shape[0]
        dim = rows // (n - 1 if kind == "bias" else n)
        errors.append(
            scaled_error(analytic.reshape(-1, dim, layout.dim), numeric.reshape(-1, dim, layout.dim))
        )
        remaining -= errors[-1].size
    return np.concatenate(errors)[:instances]


def _residual_suite(kind: str) -> Callable:
    def suite(rng: np.random.Generator, instances: int) -> np.ndarray:
        return residual_errors(rng, kind, instances)

    suite.__name__ = f"check_{kind}_residual"
    return suite


SUITES: Dict[str, Callable[[np.random.Generator, int], np.ndarray]] = {
    "jac_exp": check_jac_exp,
    "jac_log": check_jac_log,
    "jac_rotate": check_jac_rotate,
    "jac_quat_knots": check_jac_quat_knots,
    "jac_angvel_knots": check_jac_angvel_knots,
    "jac_vec_knots": check_jac_vec_knots,
    "jac_vel_knots": check_jac_vel_knots,
    "jac_acc_knots": check_jac_acc_knots,
    "toa_residual": _residual_suite("toa"),
    "tdoa_residual": _residual_suite("tdoa"),
    "accel_residual": _residual_suite("accel"),
    "gyro_residual": _residual_suite("gyro"),
    "bias_residual": _residual_suite("bias"),
    "orientation_residual": _residual_suite("orientation"),
}


def run_gradcheck(
    instances: int = 200,
    seed: int = 0,
    tolerance: float = TOLERANCE,
    suites: Optional[Iterable[str]] = None,
) -> List[GradcheckResult]:
    """
    Run the selected finite-difference suites.

    Parameters
    ----------
    instances : int
        Random instances per suite.
    seed : int
        Seed of the random generator shared by all suites.
    tolerance : float
        Largest accepted scaled error.
    suites : iterable of str, optional
        Names from :data:`SUITES`; all suites when omitted.

    Returns
    -------
    list of GradcheckResult
    """
    names = list(SUITES) if suites is None else list(suites)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"Unknown gradcheck suites: {unknown}")
    rng = np.random.default_rng(seed)
    results = []
    for name in names:
        errors = SUITES[name](rng, instances)
        result = GradcheckResult(name, int(errors.size), float(np.max(errors)), tolerance)
        logger.info("gradcheck %-22s max error %.2e", name, result.max_error)
        results.append(result)
    return results
