"""Pose from human annotations.

Rotation comes from three drawn axis lines: each drawn line must pass
through the vanishing point of its object axis, so the residual for axis
direction d with line l is l . (K R d).  The three residuals are driven
to zero over (a, b, c) by Levenberg-Marquardt.  The incidence constraints
alone admit up to eight exact rotations (even axis-sign flips of two
solution families); the solver disambiguates with the orientation the
drawn segments left in the signed line coefficients, falling back to the
candidate nearest the caller's initial guess.

Translation comes from 2D-box tangency: a known model corner projecting
exactly onto each box edge yields one linear equation in the camera
position; the four edges give a 4x3 least-squares system.  Edge
coordinates enter in normalized image coordinates, (u - cx) / fx and
(v - cy) / fy, which is what makes the rows intrinsics-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (DegenerateAnnotation, RankDeficient, SingularRotation,
                     SingularTransform)
from .fitting import FitConfig, _levenberg_marquardt
from .projection import CameraIntrinsics, box_corners, project, Pose
from .rotations import (AbcRotation, abc_to_rotation, rotation_angle_between,
                        rotation_jacobian, rotation_to_abc)

# Two normalized lines closer than this (up to sign) are the same line.
_LINE_COINCIDENCE_TOL = 1e-9

# Single-start residual above this triggers the cube-symmetry multi-start.
_MULTISTART_RESIDUAL = 1e-6

DEFAULT_ROTATION_LM = FitConfig(max_iters=100, convergence_tol=1e-18,
                                target_loss=1e-16)


@dataclass(frozen=True)
class ImageLine:
    """Image line la*u + lb*v + lc = 0, normalized so la^2 + lb^2 = 1."""

    la: float
    lb: float
    lc: float

    def __post_init__(self):
        for name in ("la", "lb", "lc"):
            object.__setattr__(self, name, float(getattr(self, name)))
        norm2 = self.la * self.la + self.lb * self.lb
        if abs(norm2 - 1.0) > 1e-12:
            raise ValueError(
                f"line coefficients not normalized: la^2 + lb^2 = {norm2!r}")

    @classmethod
    def from_coefficients(cls, la: float, lb: float, lc: float) -> "ImageLine":
        """Build from unnormalized coefficients (rescales them)."""
        norm = math.hypot(la, lb)
        if norm < 1e-15:
            raise ValueError("line has zero direction coefficients")
        return cls(la / norm, lb / norm, lc / norm)

    @classmethod
    def from_segment(cls, p0, p1) -> "ImageLine":
        """Line through two pixel points (homogeneous cross product)."""
        u0, v0 = float(p0[0]), float(p0[1])
        u1, v1 = float(p1[0]), float(p1[1])
        la = v0 - v1
        lb = u1 - u0
        lc = u0 * v1 - u1 * v0
        return cls.from_coefficients(la, lb, lc)

    def as_array(self) -> np.ndarray:
        return np.array([self.la, self.lb, self.lc])

    def signed_distance(self, u: float, v: float) -> float:
        return self.la * u + self.lb * v + self.lc


def _lines_coincide(l1: ImageLine, l2: ImageLine) -> bool:
    a, b = l1.as_array(), l2.as_array()
    return min(float(np.abs(a - b).max()), float(np.abs(a + b).max())) \
        < _LINE_COINCIDENCE_TOL


@dataclass(frozen=True)
class AxisAnnotation:
    """Three (object-frame axis direction, drawn image line) pairs."""

    axis_dirs: tuple[tuple[float, float, float], ...]
    lines: tuple[ImageLine, ImageLine, ImageLine]

    def __post_init__(self):
        dirs = np.asarray(self.axis_dirs, dtype=float)
        if dirs.shape != (3, 3):
            raise ValueError("expected three 3-vector axis directions")
        if np.abs(dirs @ dirs.T - np.eye(3)).max() > 1e-9:
            raise ValueError("axis directions must be mutually orthonormal")
        object.__setattr__(self, "axis_dirs",
                           tuple(tuple(float(x) for x in row) for row in dirs))
        if len(self.lines) != 3:
            raise ValueError("expected three axis lines")

    @classmethod
    def canonical(cls, line_x: ImageLine, line_y: ImageLine,
                  line_z: ImageLine) -> "AxisAnnotation":
        """Annotation for the canonical object axes e1, e2, e3."""
        return cls(((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
                   (line_x, line_y, line_z))

    def dirs_matrix(self) -> np.ndarray:
        return np.asarray(self.axis_dirs, dtype=float)


@dataclass(frozen=True)
class AxisSolveResult:
    """Best rotation found, its line-alignment residual (sum of squares),
    and whether LM converged / the multi-start ran."""

    rotation: AbcRotation
    residual: float
    converged: bool
    multistart_used: bool


def cube_symmetry_rotations() -> list[np.ndarray]:
    """The 24 rotations of the cube group (signed permutations, det +1),
    in a fixed deterministic order."""
    out = []
    for perm in ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
        for signs in ((1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1),
                      (-1, 1, 1), (-1, 1, -1), (-1, -1, 1), (-1, -1, -1)):
            R = np.zeros((3, 3))
            for row, (col, s) in enumerate(zip(perm, signs)):
                R[row, col] = float(s)
            if np.linalg.det(R) > 0.5:
                out.append(R)
    return out


def _axis_sign_variants(R: np.ndarray, dirs: np.ndarray) -> list[np.ndarray]:
    """Rotations that project every axis onto the same image lines as R:
    compositions flipping an even number of axis signs."""
    variants = []
    for signs in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)):
        S = np.diag(np.array(signs, dtype=float))
        variants.append(R @ dirs.T @ S @ dirs)
    return variants


def _multistart_seeds() -> list[AbcRotation]:
    """The cube-symmetry group as abc seeds.

    The group's half-turn elements have no abc encoding; they are nudged
    by a small fixed rotation, which leaves them equally good starts.
    """
    nudges = [abc_to_rotation(AbcRotation(*v)) for v in
              ((0.08, 0.0, 0.0), (0.0, 0.08, 0.0), (0.0, 0.0, 0.08))]
    seeds = []
    for S in cube_symmetry_rotations():
        try:
            seeds.append(rotation_to_abc(S))
            continue
        except SingularRotation:
            pass
        for N in nudges:
            try:
                seeds.append(rotation_to_abc(S @ N))
                break
            except SingularRotation:
                continue
    return seeds


def _common_image_point(lines) -> np.ndarray | None:
    """Least-squares intersection (u, v) of the drawn lines — the object's
    image point, since every drawn axis passes through it.  None when the
    lines are near-parallel."""
    A = np.array([[l.la, l.lb] for l in lines])
    b = -np.array([l.lc for l in lines])
    if np.linalg.matrix_rank(A, tol=1e-9) < 2:
        return None
    p, *_ = np.linalg.lstsq(A, b, rcond=None)
    return p


def _drawn_directions_aligned(K: np.ndarray, R: np.ndarray, dirs: np.ndarray,
                              lines, p0: np.ndarray) -> bool:
    """Whether the pose projects each axis in the direction it was drawn.

    A segment from p0 to p1 normalizes to the line (v0-v1, u1-u0, .), so
    the signed coefficients encode the drawn direction (lb, -la).  The
    candidate's axis image direction at the object point must have a
    positive dot product with it, for all three axes.
    """
    p0h = np.array([p0[0], p0[1], 1.0])
    for i in range(3):
        h = K @ (R @ dirs[i])
        tangent = np.array([h[0] - p0h[0] * h[2], h[1] - p0h[1] * h[2]])
        drawn = np.array([lines[i].lb, -lines[i].la])
        if float(tangent @ drawn) <= 0.0:
            return False
    return True


def solve_rotation_from_axes(camera: CameraIntrinsics, annotation: AxisAnnotation,
                             init: AbcRotation = AbcRotation(0.0, 0.0, 0.0),
                             lm_cfg: FitConfig = DEFAULT_ROTATION_LM) -> AxisSolveResult:
    """Rotation whose axis vanishing points lie on the drawn lines.

    The incidence constraints admit several exact rotations (sign-flip
    variants plus spurious line solutions), so the solver gathers
    candidates by LM — from ``init`` first, restarting from the 24
    cube-symmetry rotations when the first run leaves residual above
    1e-6 or no admissible candidate — expands each found minimum with its
    even-sign-flip variants, keeps the candidates that project every axis
    in its drawn direction (the sign of the normalized line coefficients
    encodes it), and returns the admissible candidate nearest ``init``.
    """
    lines = annotation.lines
    for i in range(3):
        for j in range(i + 1, 3):
            if _lines_coincide(lines[i], lines[j]):
                raise DegenerateAnnotation(
                    f"axis lines {i} and {j} coincide; rotation is underdetermined")

    K = camera.matrix()
    dirs = annotation.dirs_matrix()
    # Precompute l_i^T K once; residual_i = row_i . (R d_i).
    lk = np.stack([line.as_array() @ K for line in lines])

    def residual(abc):
        R = abc_to_rotation(AbcRotation(*abc))
        return np.einsum("ij,ij->i", lk, (R @ dirs.T).T)

    def jacobian(abc):
        dR = rotation_jacobian(AbcRotation(*abc))
        J = np.empty((3, 3))
        for k in range(3):
            J[:, k] = np.einsum("ij,ij->i", lk, (dR[k] @ dirs.T).T)
        return J

    runs: list[tuple[np.ndarray, float, bool]] = []

    def run(start: AbcRotation):
        x, loss, _, conv, _, _ = _levenberg_marquardt(
            residual, jacobian, start.as_array(), lm_cfg)
        runs.append((x, loss, conv))

    def candidates() -> list[tuple[np.ndarray, float, bool]]:
        """Sign-variant expansion of every run that reached the best loss."""
        best = min(loss for _, loss, _ in runs)
        out: list[tuple[np.ndarray, float, bool]] = []
        for x, loss, conv in runs:
            if loss > best * 1.001 + 1e-15:
                continue
            R = abc_to_rotation(AbcRotation(*x))
            for V in _axis_sign_variants(R, dirs):
                if not any(rotation_angle_between(V, o[0]) < 1e-6
                           for o in out):
                    out.append((V, loss, conv))
        return out

    p0 = _common_image_point(lines)

    def admissible(cands):
        if p0 is None:
            return cands
        return [c for c in cands if _drawn_directions_aligned(K, c[0], dirs,
                                                              lines, p0)]

    run(init)
    pool = admissible(candidates())
    multistart = False
    if runs[0][1] > _MULTISTART_RESIDUAL or not pool:
        multistart = True
        for seed in _multistart_seeds():
            run(seed)
        pool = admissible(candidates())
    if not pool:
        pool = candidates()

    R_init = abc_to_rotation(init)
    R_pick, _, conv_pick = min(
        pool, key=lambda c: rotation_angle_between(c[0], R_init))
    try:
        rotation = rotation_to_abc(R_pick)
    except SingularRotation:
        # representable fallback: the raw best run
        best_run = min(runs, key=lambda r: r[1])
        rotation, conv_pick = AbcRotation(*best_run[0]), best_run[2]
    residual_out = float(np.sum(residual(rotation.as_array()) ** 2))
    return AxisSolveResult(rotation, residual_out, conv_pick, multistart)


# ---------------------------------------------------------------------------
# Translation from 2D-box tangency


class Side(str, Enum):
    LEFT = "L"
    RIGHT = "R"
    TOP = "T"
    BOTTOM = "B"


@dataclass(frozen=True)
class TangencyConstraint:
    """One model point forced onto one box edge (pixel coordinate)."""

    side: Side
    edge_coord: float
    model_point: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "side", Side(self.side))
        object.__setattr__(self, "edge_coord", float(self.edge_coord))
        p = tuple(float(x) for x in self.model_point)
        if len(p) != 3:
            raise ValueError("model_point must be a 3-vector")
        object.__setattr__(self, "model_point", p)


@dataclass(frozen=True)
class BoxTangency:
    """Four tangency constraints, one per box side."""

    constraints: tuple[TangencyConstraint, ...]

    def __post_init__(self):
        if len(self.constraints) != 4:
            raise ValueError("expected exactly four tangency constraints")
        by_side = {c.side: c for c in self.constraints}
        if set(by_side) != set(Side):
            raise ValueError("need one constraint per box side L/R/T/B")
        if by_side[Side.LEFT].edge_coord > by_side[Side.RIGHT].edge_coord:
            raise ValueError("left edge right of right edge")
        if by_side[Side.TOP].edge_coord > by_side[Side.BOTTOM].edge_coord:
            raise ValueError("top edge below bottom edge")

    def constraint(self, side: Side) -> TangencyConstraint:
        return next(c for c in self.constraints if c.side == side)


@dataclass(frozen=True)
class PixelBox:
    """Axis-aligned 2D box in pixel coordinates (v grows downward)."""

    left: float
    right: float
    top: float
    bottom: float

    def __post_init__(self):
        for name in ("left", "right", "top", "bottom"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.left > self.right or self.top > self.bottom:
            raise ValueError("box edges out of order")


def _tangency_system(camera: CameraIntrinsics, R: np.ndarray,
                     tangency: BoxTangency) -> tuple[np.ndarray, np.ndarray]:
    """Rows of the camera-position system: one per edge, built from
    normalized edge coordinates and the rotation rows."""
    M = np.empty((4, 3))
    rhs = np.empty(4)
    for i, con in enumerate(tangency.constraints):
        if con.side in (Side.LEFT, Side.RIGHT):
            coord = (con.edge_coord - camera.cx) / camera.fx
            row = coord * R[2] - R[0]
        else:
            coord = (con.edge_coord - camera.cy) / camera.fy
            row = coord * R[2] - R[1]
        M[i] = row
        rhs[i] = row @ np.asarray(con.model_point, dtype=float)
    return M, rhs


def solve_translation_linear(camera: CameraIntrinsics, R,
                             tangency: BoxTangency) -> np.ndarray:
    """Least-squares translation from the four tangency equations.

    The 4x3 system is solved by orthogonal factorization; the solution is
    the camera position in the object frame, returned as the camera-frame
    translation t = -R T.
    """
    R = np.asarray(R, dtype=float)
    M, rhs = _tangency_system(camera, R, tangency)
    if np.linalg.matrix_rank(M, tol=None) < 3 or np.linalg.cond(M) >= 1e8:
        raise RankDeficient("tangency system is rank deficient (degenerate box)")
    T, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return -R @ T


def translation_init_from_box(camera: CameraIntrinsics, dims,
                              box: PixelBox) -> np.ndarray:
    """Crude translation seed from the annotated 2D box: the ray through
    the box center at the depth where the object diagonal would span the
    box diagonal (similar triangles)."""
    diag3 = float(np.linalg.norm(np.asarray(dims, dtype=float)))
    diag2 = math.hypot(box.right - box.left, box.bottom - box.top)
    f = 0.5 * (camera.fx + camera.fy)
    depth = f * diag3 / diag2 if diag2 > 1e-9 else 1.0
    u = 0.5 * (box.left + box.right)
    v = 0.5 * (box.top + box.bottom)
    return depth * np.array([(u - camera.cx) / camera.fx,
                             (v - camera.cy) / camera.fy, 1.0])


@dataclass(frozen=True)
class TangencyAssignment:
    """Fixed point of the assign/solve iteration."""

    tangency: BoxTangency
    translation: tuple[float, float, float]
    iterations: int
    converged: bool


def assign_tangent_corners(camera: CameraIntrinsics, R, dims, box: PixelBox,
                           t_init, max_iters: int = 50) -> TangencyAssignment:
    """Find which box corners touch the annotated 2D box edges.

    Alternates between projecting the 8 corners at the current
    translation, picking the extreme corner per side, and re-solving the
    tangency system.  Declares a fixed point when the corner assignment
    repeats; returns the last assignment flagged unconverged after
    ``max_iters``.
    """
    R = np.asarray(R, dtype=float)
    corners = box_corners(*dims)
    abc = rotation_to_abc(R)
    t = np.asarray(t_init, dtype=float).reshape(3)
    assignment = None
    tangency = None
    iterations = 0
    for iterations in range(1, max_iters + 1):
        pts = project(camera, Pose.of(abc, t), corners)
        new_assignment = (int(np.argmin(pts[:, 0])), int(np.argmax(pts[:, 0])),
                          int(np.argmin(pts[:, 1])), int(np.argmax(pts[:, 1])))
        if new_assignment == assignment:
            return TangencyAssignment(tangency, tuple(float(v) for v in t),
                                      iterations, True)
        assignment = new_assignment
        iL, iR, iT, iB = assignment
        tangency = BoxTangency((
            TangencyConstraint(Side.LEFT, box.left, tuple(corners[iL])),
            TangencyConstraint(Side.RIGHT, box.right, tuple(corners[iR])),
            TangencyConstraint(Side.TOP, box.top, tuple(corners[iT])),
            TangencyConstraint(Side.BOTTOM, box.bottom, tuple(corners[iB])),
        ))
        t = solve_translation_linear(camera, R, tangency)
    return TangencyAssignment(tangency, tuple(float(v) for v in t),
                              iterations, False)


# ---------------------------------------------------------------------------
# Affine keypoint augmentation


def augment_affine(pts, transform) -> np.ndarray:
    """Apply an invertible 2D affine map to every keypoint.

    ``transform`` is a 2x3 or 3x3 matrix (last row (0, 0, 1)).  Respects
    composition: augmenting with A @ B equals augmenting with B then A.
    """
    A = np.asarray(transform, dtype=float)
    if A.shape == (2, 3):
        A = np.vstack([A, [0.0, 0.0, 1.0]])
    if A.shape != (3, 3) or not np.allclose(A[2], [0.0, 0.0, 1.0], atol=1e-12):
        raise ValueError("transform must be a 2x3 or 3x3 affine matrix")
    if abs(np.linalg.det(A[:2, :2])) < 1e-12:
        raise SingularTransform("affine transform is not invertible")
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    return pts @ A[:2, :2].T + A[:2, 2]


def affine_translation(dx: float, dy: float) -> np.ndarray:
    return np.array([[1.0, 0.0, dx], [0.0, 1.0, dy], [0.0, 0.0, 1.0]])


def affine_rotation_about(angle_deg: float, center) -> np.ndarray:
    """Rotation by angle_deg about a pixel point (e.g. the image center)."""
    cu, cv = float(center[0]), float(center[1])
    th = math.radians(angle_deg)
    co, si = math.cos(th), math.sin(th)
    return np.array([
        [co, -si, cu - co * cu + si * cv],
        [si, co, cv - si * cu - co * cv],
        [0.0, 0.0, 1.0],
    ])


def affine_scale_about(scale: float, center) -> np.ndarray:
    """Uniform scaling about a pixel point."""
    cu, cv = float(center[0]), float(center[1])
    s = float(scale)
    return np.array([
        [s, 0.0, cu * (1.0 - s)],
        [0.0, s, cv * (1.0 - s)],
        [0.0, 0.0, 1.0],
    ])
