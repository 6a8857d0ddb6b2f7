"""
Levenberg-Marquardt on the knot manifold.

Quaternion knots and the extrinsic rotation are updated by right
multiplication with ``Exp`` of their tangent increment, the gravity
direction moves in its tangent plane, everything else is additive.
"""

import logging
import time
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np

from ..config import NoiseModel, SolverConfig
from ..exceptions import CalibrationUnobservable, NoMeasurements, SingularSystem
from ..geometry import quaternion as quat
from ..geometry.sphere import sphere_plus
from ..residuals import MeasurementSet, apply_gate
from .layout import ParameterLayout
from .linear import calibration_condition, damped, solve_arrowhead
from .normal import NormalSystem, assemble, residual_blocks

logger = logging.getLogger(__name__)

#: Damping used when escalating from ``lambda = 0``.
LAMBDA_FLOOR = 1e-9

#: Gain ratio above which an accepted step divides the damping by ``lambda_up``.
GOOD_GAIN = 0.75


@dataclass
class SolveStats:
    """
    Outcome of one window solve.

    ``iterations`` counts accepted steps, ``trials`` every factorization.
    ``damping`` is the value left after the last accepted step, suitable for
    warm-starting the next solve of a similar problem.
    """

    iterations: int = 0
    trials: int = 0
    initial_cost: float = 0.0
    final_cost: float = 0.0
    rejected: int = 0
    skipped: int = 0
    residuals: int = 0
    runtime_ms: float = 0.0
    converged: bool = False
    calib_condition: Optional[float] = None
    damping: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def lm_step(system: NormalSystem, lam: float) -> np.ndarray:
    """
    Solve ``(H + lam * diag(H)) phi = -g``.

    Examples
    --------
    With ``H = I``, ``g = -e1`` and ``lam = 0`` the step is ``e1``.
    """
    matrix, _ = damped(system.H, lam)
    return -solve_arrowhead(matrix, system.g, system.layout.n_knot_cols)


def retract(state, phi: np.ndarray, layout: ParameterLayout):
    """Apply tangent increment ``phi`` to ``state`` and return the new state."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (layout.dim,):
        raise ValueError(f"Increment has shape {phi.shape}, layout expects ({layout.dim},)")

    free = layout.columns >= 0
    knot_phi = np.zeros(layout.columns.shape)
    knot_phi[free] = phi[layout.columns[free]]

    updates = {}
    for name in layout.blocks:
        cols = layout.block_slice(name)
        delta = knot_phi[:, cols]
        rows = free[:, cols].any(axis=1)
        if name == "q":
            q = state.q.copy()
            q[rows] = quat.plus(q[rows], delta[rows])
            updates["q"] = q
        else:
            values = getattr(state, name) + delta
            updates[name] = values

    if layout.calibrating:
        calib = state.calib
        updates["calib"] = calib.copy(
            q_WU=quat.plus(calib.q_WU, phi[layout.calib_slice("q_WU")]),
            t_WU=calib.t_WU + phi[layout.calib_slice("t_WU")],
            g_dir=sphere_plus(calib.g_dir, phi[layout.calib_slice("g_dir")]),
        )
    return state.with_updates(**updates)


def check_calibration(system: NormalSystem, config: SolverConfig) -> Optional[float]:
    """
    Condition number of the calibration block, or None without calibration.

    Raises
    ------
    CalibrationUnobservable
        If the condition number exceeds ``config.calib_condition_max``.
    """
    layout = system.layout
    if not layout.calibrating:
        return None
    condition = calibration_condition(system.H, layout.n_knot_cols)
    if condition > config.calib_condition_max:
        raise CalibrationUnobservable(
            "Calibration is not observable from the window",
            condition=condition,
            threshold=config.calib_condition_max,
        )
    return condition


def solve(
    state,
    measurements: MeasurementSet,
    noise: NoiseModel,
    config: SolverConfig,
    layout: Optional[ParameterLayout] = None,
    gate_threshold: Optional[float] = None,
    damping: Optional[float] = None,
) -> Tuple[object, SolveStats]:
    """
    Minimize the whitened window cost with Levenberg-Marquardt.

    UWB gating is decided once, at the initial iterate, so every iteration
    minimizes the same cost. An accepted step whose cost decrease matches
    the quadratic model (gain ratio above ``GOOD_GAIN``) divides the damping
    by ``lambda_up``, any other accepted step multiplies it by
    ``lambda_down``. The loop stops once the model predicts less than
    ``cost_tol`` relative decrease.

    Parameters
    ----------
    state : WindowState
        Initial estimate, at least four knots.
    measurements : MeasurementSet
        Window measurements.
    noise : NoiseModel
        Covariances and residual weights.
    config : SolverConfig
        Damping schedule and stopping rules.
    layout : ParameterLayout, optional
        Free parameters; defaults to every knot block without calibration.
    gate_threshold : float, optional
        UWB outlier gate in meters; None disables gating.
    damping : float, optional
        Initial damping; defaults to ``config.lambda_init``.

    Returns
    -------
    state : WindowState
        Final estimate.
    stats : SolveStats
        Iteration and cost summary.

    Raises
    ------
    NoMeasurements
        If no measurement falls inside the window.
    SingularSystem
        If the damped system cannot be factorized up to ``lambda_max``.
    CalibrationUnobservable
        If calibration is estimated but not observable.
    """
    started = time.perf_counter()
    if layout is None:
        layout = ParameterLayout(state.count, n_fixed=getattr(state, "n_idle", 0))
    stats = SolveStats()

    if gate_threshold is not None:
        measurements, stats.rejected = apply_gate(state, measurements, gate_threshold)
    if len(measurements) == 0:
        raise NoMeasurements("Window solve needs at least one measurement")

    system = assemble(state, measurements, noise, layout)
    if system.n_residuals == 0:
        raise NoMeasurements(
            f"None of {len(measurements)} measurements falls inside the window"
        )
    stats.skipped = system.skipped
    stats.residuals = system.n_residuals
    stats.initial_cost = stats.final_cost = system.cost
    stats.calib_condition = check_calibration(system, config)

    lam = config.lambda_init if damping is None else float(damping)
    stats.damping = lam
    for _ in range(config.max_iters):
        accepted = False
        while not accepted:
            stats.trials += 1
            try:
                phi = lm_step(system, lam)
            except SingularSystem:
                phi = None
            if phi is not None and np.linalg.norm(phi) <= config.step_tol:
                stats.converged = True
                break
            if phi is not None:
                # decrease of the undamped quadratic model along phi
                predicted = -(2.0 * system.g @ phi + phi @ system.H @ phi)
                if predicted <= config.cost_tol * system.cost:
                    stats.converged = True
                    break
                candidate = retract(state, phi, layout)
                blocks = residual_blocks(candidate, measurements, noise)
                cost = sum(block.cost() for block in blocks)
                if cost < system.cost:
                    accepted = True
                    break
            lam = max(lam, LAMBDA_FLOOR) * config.lambda_up
            if lam > config.lambda_max:
                if phi is None:
                    raise SingularSystem(
                        "Normal equations stay singular under maximal damping", damping=lam
                    )
                logger.debug("Damping exceeded %g without a cost decrease", config.lambda_max)
                stats.converged = True
                break
        if not accepted:
            break

        previous = system.cost
        state = candidate
        system = assemble(state, measurements, noise, layout, blocks=blocks)
        stats.iterations += 1
        stats.final_cost = system.cost
        gain = (previous - system.cost) / predicted
        shrink = 1.0 / config.lambda_up if gain > GOOD_GAIN else config.lambda_down
        lam = max(lam * shrink, config.lambda_min)
        stats.damping = lam
        if previous - system.cost <= config.cost_tol * max(previous, np.finfo(float).tiny):
            stats.converged = True
            break

    stats.runtime_ms = 1e3 * (time.perf_counter() - started)
    logger.debug(
        "Window solve: %d iterations, cost %.6g -> %.6g, %.1f ms",
        stats.iterations,
        stats.initial_cost,
        stats.final_cost,
        stats.runtime_ms,
    )
    return state, stats
