"""
Unit directions on S^2, used for the gravity direction.
"""

import numpy as np


def sphere_basis(d: np.ndarray) -> np.ndarray:
    """
    Orthonormal pair spanning the tangent plane of S^2 at unit vector ``d``.

    Returns a 3x2 matrix ``B`` with ``B^T d = 0`` and ``B^T B = I``.
    """
    d = np.asarray(d, dtype=float)
    d = d / np.linalg.norm(d)
    helper = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    b1 = np.cross(d, helper)
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(d, b1)
    return np.stack([b1, b2], axis=1)


def sphere_plus(d: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Move ``d`` by ``phi`` in its tangent plane and renormalize."""
    moved = np.asarray(d, dtype=float) + sphere_basis(d) @ np.asarray(phi, dtype=float)
    return moved / np.linalg.norm(moved)


def angle_between(a: np.ndarray, b: np.ndarray) -> float:
    """Angle in radians between two directions."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.arctan2(np.linalg.norm(np.cross(a, b)), np.dot(a, b)))
