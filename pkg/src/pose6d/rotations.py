"""Three-parameter (a, b, c) rotation encoding and exact conversions.

The encoding is the Gibbs (Cayley) vector: a rotation by angle theta about
unit axis n is stored as (a, b, c) = tan(theta/2) * n.  A rational formula
maps it to a rotation matrix that is orthonormal by construction for every
finite input, which makes the encoding convenient to regress and to
differentiate.  The half-turn (theta = pi) has no finite encoding; the
inverse conversion refuses it instead of returning blown-up values.

Matrix convention: row-major 3x3 ``numpy`` arrays, acting on column
vectors (``R @ x`` rotates ``x``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularRotation

# 1 + trace(R) below this value means the rotation is numerically a
# half-turn and (a, b, c) would overflow.
TRACE_EPSILON = 1e-8


@dataclass(frozen=True)
class AbcRotation:
    """Gibbs-vector rotation: tan(theta/2) * axis, stored as (a, b, c)."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"rotation component {name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, v) -> "AbcRotation":
        v = np.asarray(v, dtype=float).reshape(3)
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c], dtype=float)

    def norm(self) -> float:
        return math.sqrt(self.a * self.a + self.b * self.b + self.c * self.c)

    def angle_deg(self) -> float:
        """Rotation angle represented by this encoding, in degrees."""
        return math.degrees(2.0 * math.atan(self.norm()))


IDENTITY_ABC = AbcRotation(0.0, 0.0, 0.0)


def _polynomial_matrix(a: float, b: float, c: float) -> np.ndarray:
    """Numerator matrix of the rational rotation formula (denominator n)."""
    return np.array([
        [1.0 + a * a - b * b - c * c, 2.0 * a * b - 2.0 * c, 2.0 * a * c + 2.0 * b],
        [2.0 * a * b + 2.0 * c, 1.0 - a * a + b * b - c * c, 2.0 * b * c - 2.0 * a],
        [2.0 * a * c - 2.0 * b, 2.0 * b * c + 2.0 * a, 1.0 - a * a - b * b + c * c],
    ])


def abc_to_rotation(r: AbcRotation) -> np.ndarray:
    """Rotation matrix for a Gibbs vector; orthonormal for every finite input."""
    n = 1.0 + r.a * r.a + r.b * r.b + r.c * r.c
    return _polynomial_matrix(r.a, r.b, r.c) / n


def rotation_to_abc(R, trace_epsilon: float = TRACE_EPSILON) -> AbcRotation:
    """Inverse of :func:`abc_to_rotation`.

    Raises :class:`SingularRotation` when ``1 + trace(R) <= trace_epsilon``
    (a half-turn, where the encoding is undefined).
    """
    R = np.asarray(R, dtype=float)
    denom = 1.0 + R[0, 0] + R[1, 1] + R[2, 2]
    if denom <= trace_epsilon:
        raise SingularRotation(
            f"rotation angle too close to 180 degrees (1 + trace = {denom:g})")
    return AbcRotation(
        (R[2, 1] - R[1, 2]) / denom,
        (R[0, 2] - R[2, 0]) / denom,
        (R[1, 0] - R[0, 1]) / denom,
    )


def rotation_jacobian(r: AbcRotation) -> np.ndarray:
    """Partials of the rotation matrix w.r.t. (a, b, c).

    Returns a (3, 3, 3) array: ``out[0] = dR/da``, ``out[1] = dR/db``,
    ``out[2] = dR/dc``.  Quotient rule on the rational formula, so the
    partials are exact.
    """
    a, b, c = r.a, r.b, r.c
    n = 1.0 + a * a + b * b + c * c
    R = _polynomial_matrix(a, b, c) / n
    dMda = np.array([
        [2.0 * a, 2.0 * b, 2.0 * c],
        [2.0 * b, -2.0 * a, -2.0],
        [2.0 * c, 2.0, -2.0 * a],
    ])
    dMdb = np.array([
        [-2.0 * b, 2.0 * a, 2.0],
        [2.0 * a, 2.0 * b, 2.0 * c],
        [-2.0, 2.0 * c, -2.0 * b],
    ])
    dMdc = np.array([
        [-2.0 * c, -2.0, 2.0 * a],
        [2.0, -2.0 * c, 2.0 * b],
        [2.0 * a, 2.0 * b, 2.0 * c],
    ])
    return np.stack([
        (dMda - 2.0 * a * R) / n,
        (dMdb - 2.0 * b * R) / n,
        (dMdc - 2.0 * c * R) / n,
    ])


def rotation_angle_between(Ra, Rb) -> float:
    """Geodesic angle between two rotation matrices, in degrees.

    The arccos argument is clamped to [-1, 1] to absorb floating-point
    drift in the trace.
    """
    Ra = np.asarray(Ra, dtype=float)
    Rb = np.asarray(Rb, dtype=float)
    cos_angle = (np.trace(Ra @ Rb.T) - 1.0) / 2.0
    return math.degrees(math.acos(min(1.0, max(-1.0, cos_angle))))


def orthonormality_error(R) -> float:
    """Max-norm of R^T R - I; zero for a perfectly orthonormal matrix."""
    R = np.asarray(R, dtype=float)
    return float(np.abs(R.T @ R - np.eye(3)).max())


def is_rotation_matrix(R, tol: float = 1e-9) -> bool:
    """True when R is orthonormal with determinant +1, within tol."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return orthonormality_error(R) <= tol and abs(np.linalg.det(R) - 1.0) <= tol


def nearest_rotation(M) -> np.ndarray:
    """Orthogonal polar factor of M: the closest rotation in Frobenius norm."""
    U, _, Vt = np.linalg.svd(np.asarray(M, dtype=float))
    R = U @ Vt
    if np.linalg.det(R) < 0.0:
        R = U @ np.diag([1.0, 1.0, -1.0]) @ Vt
    return R
