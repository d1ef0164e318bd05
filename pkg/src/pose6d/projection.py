"""Differentiable pinhole projection of 3D model corners.

Forward pass: camera point (X, Y, Z) = R @ P + t for each model corner P,
then u = cx + fx * X / Z and v = cy + fy * Y / Z.  The backward pass
chains the perspective quotient with the exact rotation partials, giving
per-corner 2x6 Jacobians w.r.t. (a, b, c, tx, ty, tz).

Point containers are plain arrays: model corners are (n, 3), projected
points (n, 2), both in the same fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDepth, LengthMismatch
from .rotations import AbcRotation, abc_to_rotation, rotation_jacobian

# Depth cutoff (meters): points at or below it raise DegenerateDepth.
# A hard error, not a clamp — clamping would corrupt gradients near the
# image plane.
DEPTH_EPSILON = 1e-6


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics (pixels)."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"intrinsic {name} must be finite")
            object.__setattr__(self, name, value)
        if self.fx <= 0.0 or self.fy <= 0.0:
            raise ValueError("focal lengths must be positive")

    def matrix(self) -> np.ndarray:
        return np.array([
            [self.fx, 0.0, self.cx],
            [0.0, self.fy, self.cy],
            [0.0, 0.0, 1.0],
        ])


@dataclass(frozen=True)
class Pose:
    """Rotation (abc encoding) plus camera-frame translation in meters."""

    rotation: AbcRotation
    translation: tuple[float, float, float]

    def __post_init__(self):
        t = tuple(float(v) for v in self.translation)
        if len(t) != 3 or not all(math.isfinite(v) for v in t):
            raise ValueError("translation must be three finite reals")
        object.__setattr__(self, "translation", t)

    @classmethod
    def of(cls, rotation: AbcRotation, translation) -> "Pose":
        t = np.asarray(translation, dtype=float).reshape(3)
        return cls(rotation, (float(t[0]), float(t[1]), float(t[2])))

    def translation_array(self) -> np.ndarray:
        return np.array(self.translation, dtype=float)


def box_corners(length: float, width: float, height: float) -> np.ndarray:
    """The 8 corners of an origin-centered box, shape (8, 3).

    Corner order is fixed by bit pattern: corner ``i`` lies at positive
    half-extent along x when bit 0 of ``i`` is set, along y for bit 1,
    along z for bit 2.  Corner 0 is (-L/2, -W/2, -H/2), corner 7 is
    (+L/2, +W/2, +H/2).
    """
    if not (length > 0.0 and width > 0.0 and height > 0.0):
        raise ValueError("box dimensions must be positive")
    half = np.array([length, width, height], dtype=float) / 2.0
    signs = np.array([[1.0 if (i >> k) & 1 else -1.0 for k in range(3)]
                      for i in range(8)])
    return signs * half


# Pairs of corner indices joined by a box edge (differ in exactly one bit).
BOX_EDGES: tuple[tuple[int, int], ...] = tuple(
    (i, j) for i in range(8) for j in range(i + 1, 8)
    if bin(i ^ j).count("1") == 1)


def _camera_points(pose: Pose, corners) -> tuple[np.ndarray, np.ndarray]:
    """(R, camera-frame points); raises DegenerateDepth on a shallow point."""
    R = abc_to_rotation(pose.rotation)
    pts = np.asarray(corners, dtype=float).reshape(-1, 3)
    cam = pts @ R.T + pose.translation_array()
    shallow = np.nonzero(cam[:, 2] <= DEPTH_EPSILON)[0]
    if shallow.size:
        i = int(shallow[0])
        raise DegenerateDepth(i, float(cam[i, 2]))
    return R, cam


def project(camera: CameraIntrinsics, pose: Pose, corners) -> np.ndarray:
    """Project model corners to pixels; returns (n, 2) in corner order."""
    _, cam = _camera_points(pose, corners)
    z = cam[:, 2]
    u = camera.cx + camera.fx * cam[:, 0] / z
    v = camera.cy + camera.fy * cam[:, 1] / z
    return np.stack([u, v], axis=1)


def projection_jacobian(camera: CameraIntrinsics, pose: Pose, corners) -> np.ndarray:
    """Per-corner 2x6 pixel Jacobians w.r.t. (a, b, c, tx, ty, tz).

    Shape (n, 2, 6).  The translation block is the perspective quotient;
    the rotation block chains it with the exact abc partials.  Structural
    zeros: du/dty = 0 and dv/dtx = 0 for every input.
    """
    _, cam = _camera_points(pose, corners)
    pts = np.asarray(corners, dtype=float).reshape(-1, 3)
    n = pts.shape[0]
    x, y, z = cam[:, 0], cam[:, 1], cam[:, 2]

    # Pixel vs camera-point quotient, (n, 2, 3).
    quot = np.zeros((n, 2, 3))
    quot[:, 0, 0] = camera.fx / z
    quot[:, 0, 2] = -camera.fx * x / (z * z)
    quot[:, 1, 1] = camera.fy / z
    quot[:, 1, 2] = -camera.fy * y / (z * z)

    # Camera point vs (a, b, c): dR/dk @ P, arranged (n, 3 params, 3).
    dR = rotation_jacobian(pose.rotation)
    dcam = np.einsum("kij,nj->nki", dR, pts)

    J = np.empty((n, 2, 6))
    J[:, :, :3] = np.einsum("nij,nkj->nik", quot, dcam)
    J[:, :, 3:] = quot
    return J


def reprojection_loss(pred, target) -> float:
    """Sum of squared pixel residuals between two equally-long point lists."""
    pred = np.asarray(pred, dtype=float).reshape(-1, 2)
    target = np.asarray(target, dtype=float).reshape(-1, 2)
    if pred.shape != target.shape:
        raise LengthMismatch(
            f"point lists differ in length: {pred.shape[0]} vs {target.shape[0]}")
    d = pred - target
    return float(np.sum(d * d))


def loss_gradient(camera: CameraIntrinsics, pose: Pose, corners, target) -> np.ndarray:
    """Gradient of the reprojection loss w.r.t. (a, b, c, tx, ty, tz).

    Equals 2 * sum_i J_i^T r_i with r_i the pixel residual of corner i;
    the zero vector exactly when the projection matches the target.
    """
    pred = project(camera, pose, corners)
    target = np.asarray(target, dtype=float).reshape(-1, 2)
    if pred.shape != target.shape:
        raise LengthMismatch(
            f"point lists differ in length: {pred.shape[0]} vs {target.shape[0]}")
    J = projection_jacobian(camera, pose, corners)
    return 2.0 * np.einsum("nij,ni->j", J, pred - target)
