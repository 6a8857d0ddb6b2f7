"""
Unit-quaternion arithmetic on S^3 and its tangent space at identity.

Quaternions are numpy arrays whose trailing axis holds ``[w, x, y, z]``
(scalar first). Every function accepts any number of leading batch axes and
broadcasts them, so a whole measurement batch is processed in one call.

Tangent vectors live at half-angle scale: ``exp_map(v) = [cos|v|, v sinc|v|]``,
so a rotation by angle ``theta`` about unit axis ``u`` has tangent
``theta * u / 2``.
"""

from typing import Tuple

import numpy as np

from ..exceptions import AntipodalInput

#: Below this norm the Taylor branches of exp/log and their Jacobians are used.
SMALL_ANGLE = 1e-4

#: Conjugation matrix, ``CONJUGATE @ q == inverse(q)`` for unit ``q``.
CONJUGATE = np.diag([1.0, -1.0, -1.0, -1.0])

_ANTIPODE_TOL = 1e-12


def identity(shape: Tuple[int, ...] = ()) -> np.ndarray:
    """Identity quaternion(s) ``[1, 0, 0, 0]`` with the given batch shape."""
    q = np.zeros(tuple(shape) + (4,))
    q[..., 0] = 1.0
    return q


def normalize(q: np.ndarray) -> np.ndarray:
    """Project onto the unit sphere along the last axis."""
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def skew(x: np.ndarray) -> np.ndarray:
    """Cross-product matrix ``[x]_x`` with ``skew(x) @ y == cross(x, y)``."""
    x = np.asarray(x, dtype=float)
    x0, x1, x2 = np.moveaxis(x, -1, 0)
    zero = np.zeros_like(x0)
    return np.stack(
        [
            np.stack([zero, -x2, x1], axis=-1),
            np.stack([x2, zero, -x0], axis=-1),
            np.stack([-x1, x0, zero], axis=-1),
        ],
        axis=-2,
    )


def hamilton(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Hamilton product ``a ⊗ b``, renormalized.

    Parameters
    ----------
    a, b : np.ndarray
        Unit quaternions of shape (..., 4); batch axes broadcast.

    Returns
    -------
    np.ndarray
        Unit quaternion(s) of the broadcast shape.

    Examples
    --------
    >>> hamilton([0, 1, 0, 0], [0, 0, 1, 0])
    array([0., 0., 0., 1.])
    """
    aw, ax, ay, az = np.moveaxis(np.asarray(a, dtype=float), -1, 0)
    bw, bx, by, bz = np.moveaxis(np.asarray(b, dtype=float), -1, 0)
    product = np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )
    return normalize(product)


def inverse(q: np.ndarray) -> np.ndarray:
    """Inverse of a unit quaternion, i.e. its conjugate ``[w, -v]``."""
    return np.asarray(q, dtype=float) * np.array([1.0, -1.0, -1.0, -1.0])


def left_matrix(q: np.ndarray) -> np.ndarray:
    """
    Matrix of left multiplication: ``left_matrix(a) @ b == a ⊗ b``.

    Returns an array of shape (..., 4, 4).
    """
    w, x, y, z = np.moveaxis(np.asarray(q, dtype=float), -1, 0)
    return np.stack(
        [
            np.stack([w, -x, -y, -z], axis=-1),
            np.stack([x, w, -z, y], axis=-1),
            np.stack([y, z, w, -x], axis=-1),
            np.stack([z, -y, x, w], axis=-1),
        ],
        axis=-2,
    )


def right_matrix(q: np.ndarray) -> np.ndarray:
    """
    Matrix of right multiplication: ``right_matrix(b) @ a == a ⊗ b``.

    Returns an array of shape (..., 4, 4).
    """
    w, x, y, z = np.moveaxis(np.asarray(q, dtype=float), -1, 0)
    return np.stack(
        [
            np.stack([w, -x, -y, -z], axis=-1),
            np.stack([x, w, z, -y], axis=-1),
            np.stack([y, -z, w, x], axis=-1),
            np.stack([z, y, -x, w], axis=-1),
        ],
        axis=-2,
    )


def rotate(q: np.ndarray, x: np.ndarray) -> np.ndarray:
    """
    Rotate vector(s) ``x`` by ``q``: vector part of ``q ⊗ [0, x] ⊗ q⁻¹``.

    Examples
    --------
    >>> rotate([0, 0, 0, 1], [1, 0, 0])
    array([-1.,  0.,  0.])
    """
    q = np.asarray(q, dtype=float)
    x = np.asarray(x, dtype=float)
    w = q[..., :1]
    v = q[..., 1:]
    t = 2.0 * np.cross(v, x)
    return x + w * t + np.cross(v, t)


def rotation_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix ``R(q)`` with ``R(q) @ x == rotate(q, x)``; shape (..., 3, 3)."""
    w, x, y, z = np.moveaxis(np.asarray(q, dtype=float), -1, 0)
    return np.stack(
        [
            np.stack(
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                axis=-1,
            ),
            np.stack(
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                axis=-1,
            ),
            np.stack(
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
                axis=-1,
            ),
        ],
        axis=-2,
    )


def _sinc(theta: np.ndarray, small: np.ndarray) -> np.ndarray:
    safe = np.where(small, 1.0, theta)
    series = 1.0 - theta**2 / 6.0 + theta**4 / 120.0
    return np.where(small, series, np.sin(safe) / safe)


def exp_map(v: np.ndarray) -> np.ndarray:
    """
    Exponential map at identity, ``Exp(v) = [cos|v|, v sinc|v|]``.

    Parameters
    ----------
    v : np.ndarray
        Tangent vector(s) of shape (..., 3).

    Returns
    -------
    np.ndarray
        Unit quaternion(s) of shape (..., 4).

    Examples
    --------
    >>> exp_map([np.pi / 2, 0, 0]).round(12)
    array([0., 1., 0., 0.])
    """
    v = np.asarray(v, dtype=float)
    theta = np.linalg.norm(v, axis=-1)
    small = theta < SMALL_ANGLE
    s = _sinc(theta, small)
    q = np.concatenate([np.cos(theta)[..., None], v * s[..., None]], axis=-1)
    return normalize(q)


def _check_antipode(w: np.ndarray, n: np.ndarray, q: np.ndarray) -> None:
    antipodal = (w <= -1.0 + _ANTIPODE_TOL) & (n < _ANTIPODE_TOL)
    if np.any(antipodal):
        raise AntipodalInput(
            "Logarithm undefined at the antipode of identity",
            quaternion=np.asarray(q)[antipodal][0].tolist(),
        )


def _log_scale(w: np.ndarray, n: np.ndarray):
    """Return ``atan2(n, w) / n`` and the small-norm mask used to compute it."""
    small = (n < SMALL_ANGLE) & (w > 0)
    safe_n = np.where(small, 1.0, n)
    safe_w = np.where(small, w, 1.0)
    s = (n / safe_w) ** 2
    series = (1.0 - s / 3.0 + s**2 / 5.0) / safe_w
    return np.where(small, series, np.arctan2(n, w) / safe_n), small


def log_map(q: np.ndarray) -> np.ndarray:
    """
    Logarithm map at identity, principal branch via ``atan2(|v|, w)``.

    Parameters
    ----------
    q : np.ndarray
        Unit quaternion(s) of shape (..., 4).

    Returns
    -------
    np.ndarray
        Tangent vector(s) of shape (..., 3) with norm below pi.

    Raises
    ------
    AntipodalInput
        If any input equals ``[-1, 0, 0, 0]`` within 1e-12.
    """
    q = np.asarray(q, dtype=float)
    w = q[..., 0]
    r = q[..., 1:]
    n = np.linalg.norm(r, axis=-1)
    _check_antipode(w, n, q)
    f, _ = _log_scale(w, n)
    return f[..., None] * r


def jac_exp(v: np.ndarray) -> np.ndarray:
    """
    Jacobian of ``exp_map`` with respect to ``v``; shape (..., 4, 3).

    Row 0 is ``d cos|v| / dv``, rows 1-3 are ``d (v sinc|v|) / dv``.
    """
    v = np.asarray(v, dtype=float)
    theta = np.linalg.norm(v, axis=-1)
    small = theta < SMALL_ANGLE
    s = _sinc(theta, small)
    safe = np.where(small, 1.0, theta)
    outer_exact = (np.cos(safe) - s) / safe**2
    outer_series = -1.0 / 3.0 + theta**2 / 30.0 - theta**4 / 840.0
    outer = np.where(small, outer_series, outer_exact)

    top = -v * s[..., None]
    block = outer[..., None, None] * (v[..., :, None] * v[..., None, :])
    block = block + s[..., None, None] * np.eye(3)
    return np.concatenate([top[..., None, :], block], axis=-2)


def jac_log(q: np.ndarray) -> np.ndarray:
    """
    Jacobian of ``log_map`` with respect to the four quaternion components.

    The expression assumes unit norm, so it agrees with the true derivative
    along directions tangent to the sphere. Shape (..., 3, 4).

    Raises
    ------
    AntipodalInput
        If any input equals ``[-1, 0, 0, 0]`` within 1e-12.
    """
    q = np.asarray(q, dtype=float)
    w = q[..., 0]
    r = q[..., 1:]
    n = np.linalg.norm(r, axis=-1)
    _check_antipode(w, n, q)
    f, small = _log_scale(w, n)

    safe_n = np.where(small, 1.0, n)
    safe_w = np.where(small, w, 1.0)
    h_exact = (w - f) / safe_n**2
    h_series = -1.0 / safe_w + 1.0 / (3.0 * safe_w**3) - n**2 / (5.0 * safe_w**5)
    h = np.where(small, h_series, h_exact)

    block = f[..., None, None] * np.eye(3)
    block = block + h[..., None, None] * (r[..., :, None] * r[..., None, :])
    return np.concatenate([-r[..., :, None], block], axis=-1)


def jac_rotate(q: np.ndarray, x: np.ndarray) -> np.ndarray:
    """
    Jacobian of ``rotate(q, x)`` with respect to ``q``; shape (..., 3, 4).

    Differentiates the quadratic form ``q ⊗ [0, x] ⊗ q*``, which matches the
    derivative of ``rotate`` along directions tangent to the sphere.
    """
    q = np.asarray(q, dtype=float)
    x = np.asarray(x, dtype=float)
    batch = np.broadcast_shapes(q.shape[:-1], x.shape[:-1])
    q = np.broadcast_to(q, batch + (4,))
    x = np.broadcast_to(x, batch + (3,))
    w = q[..., 0]
    v = q[..., 1:]
    first = 2.0 * (w[..., None] * x + np.cross(v, x))
    vx = np.sum(v * x, axis=-1)
    rest = vx[..., None, None] * np.eye(3)
    rest = rest + v[..., :, None] * x[..., None, :] - x[..., :, None] * v[..., None, :]
    rest = rest - w[..., None, None] * skew(x)
    return np.concatenate([first[..., :, None], 2.0 * rest], axis=-1)


def tangent_basis(q: np.ndarray) -> np.ndarray:
    """
    Derivative of ``q ⊗ Exp(phi)`` at ``phi = 0``; shape (..., 4, 3).

    Equals ``left_matrix(q) @ jac_exp(0)``, i.e. the last three columns of the
    left-multiplication matrix.
    """
    return left_matrix(q)[..., :, 1:]


def plus(q: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Right-perturbation retraction ``q ⊗ Exp(phi)``."""
    return hamilton(q, exp_map(phi))


def from_axis_angle(axis: np.ndarray, angle: np.ndarray) -> np.ndarray:
    """Quaternion rotating by ``angle`` (radians) about ``axis``."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis, axis=-1, keepdims=True)
    return exp_map(0.5 * np.asarray(angle, dtype=float)[..., None] * axis)


def geodesic_angle(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Rotation angle between ``a`` and ``b`` in radians, ``2 |Log(a⁻¹ ⊗ b)|``.

    The sign of the relative quaternion is chosen so ``q`` and ``-q`` compare
    as the same rotation.
    """
    d = hamilton(inverse(a), b)
    d = np.where(d[..., :1] < 0, -d, d)
    return 2.0 * np.linalg.norm(log_map(d), axis=-1)
