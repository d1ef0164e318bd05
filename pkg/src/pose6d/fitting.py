"""PnP-free pose recovery by iterative least squares through the
projection layer.

Both fitters run damped Gauss-Newton (Levenberg-Marquardt) on the pixel
residual vector.  ``fit_pose`` works directly on (a, b, c, tx, ty, tz);
``fit_region_channels`` optimizes the raw grid channels
(a, b, c, tu, tv, tw) so gradients flow through the sigmoid / exponential
decode, the rotation formula, and the projection — the full chain a
region-layer network would train through.  A plain gradient-descent step
is exposed as a baseline so the loss-decrease property is testable in
isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import LengthMismatch, Pose6dError, SingularRotation
from .projection import CameraIntrinsics, Pose, project, projection_jacobian
from .region import GridDecodeConfig, RegionCellOutput, decode_translation, sigmoid
from .rotations import AbcRotation, abc_to_rotation, rotation_to_abc

# Iterates whose Gibbs vector exceeds this norm are re-fit in a rotated
# object frame; the encoding is ill-conditioned that close to 180 degrees.
GIBBS_NORM_LIMIT = 50.0

# 90-degree frame rotations tried, in order, when the limit trips.
_FRAME_ROTATIONS = (AbcRotation(1.0, 0.0, 0.0),
                    AbcRotation(0.0, 1.0, 0.0),
                    AbcRotation(0.0, 0.0, 1.0))


@dataclass(frozen=True)
class FitConfig:
    """Levenberg-Marquardt settings.

    ``convergence_tol`` is the accepted-step loss decrease (pixels^2)
    below which the fit is declared converged; ``target_loss`` is the
    absolute loss under which it converges immediately.
    """

    max_iters: int = 200
    initial_lambda: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 0.1
    lambda_max: float = 1e12
    convergence_tol: float = 1e-12
    target_loss: float = 1e-10
    param_space: str = "direct_pose"

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        for name in ("initial_lambda", "lambda_up", "lambda_down",
                     "lambda_max", "convergence_tol", "target_loss"):
            if not float(getattr(self, name)) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.param_space not in ("direct_pose", "region_channels"):
            raise ValueError(f"unknown param_space {self.param_space!r}")


@dataclass(frozen=True)
class FitReport:
    """Outcome of one fit; ``loss_trace`` is non-increasing."""

    final_pose: Pose
    final_loss: float
    iters: int
    converged: bool
    loss_trace: tuple[float, ...]
    failure: str | None = None


@dataclass(frozen=True)
class RegionFitResult:
    """Region-channel fit outcome: report plus the final raw channels."""

    report: FitReport
    cell: RegionCellOutput


def gradient_descent_step(params, grad, step: float) -> np.ndarray:
    """One plain descent step: params - step * grad."""
    return np.asarray(params, dtype=float) - step * np.asarray(grad, dtype=float)


def _levenberg_marquardt(residual_fn: Callable[[np.ndarray], np.ndarray],
                         jacobian_fn: Callable[[np.ndarray], np.ndarray],
                         x0: np.ndarray, cfg: FitConfig):
    """Damped least squares with Marquardt diagonal scaling.

    Returns (x, loss, iters, converged, trace, failure).  Only accepted
    steps are counted and traced, so the trace never increases.  Trial
    steps that leave the valid domain (projection errors) or go
    non-finite are rejected by inflating the damping.
    """
    x = np.array(x0, dtype=float)
    r = residual_fn(x)  # errors on the initial evaluation propagate
    loss = float(r @ r)
    trace = [loss]
    if loss < cfg.target_loss:
        return x, loss, 0, True, trace, None

    lam = cfg.initial_lambda
    iters = 0
    converged = False
    failure = None
    while iters < cfg.max_iters:
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(x))):
            failure = "non_finite"
            break
        J = jacobian_fn(x)
        if not np.all(np.isfinite(J)):
            failure = "non_finite"
            break
        g = J.T @ r
        H = J.T @ J
        scale = np.diag(H).copy()
        scale[scale < 1e-12] = 1e-12

        accepted = False
        while lam <= cfg.lambda_max:
            try:
                step = np.linalg.solve(H + lam * np.diag(scale), -g)
            except np.linalg.LinAlgError:
                lam *= cfg.lambda_up
                continue
            if not np.all(np.isfinite(step)):
                lam *= cfg.lambda_up
                continue
            x_new = x + step
            try:
                r_new = residual_fn(x_new)
            except Pose6dError:
                # step left the valid domain (e.g. went behind the camera)
                lam *= cfg.lambda_up
                continue
            loss_new = float(r_new @ r_new)
            if math.isfinite(loss_new) and loss_new < loss:
                accepted = True
                break
            lam *= cfg.lambda_up
        if not accepted:
            break  # no descent direction left at this damping range

        change = loss - loss_new
        x, r, loss = x_new, r_new, loss_new
        iters += 1
        trace.append(loss)
        lam = max(lam * cfg.lambda_down, 1e-15)
        if loss < cfg.target_loss or change < cfg.convergence_tol:
            converged = True
            break
    return x, loss, iters, converged, trace, failure


# ---------------------------------------------------------------------------
# Direct pose fitting


def _check_fit_inputs(corners, target) -> tuple[np.ndarray, np.ndarray]:
    corners = np.asarray(corners, dtype=float).reshape(-1, 3)
    target = np.asarray(target, dtype=float).reshape(-1, 2)
    if corners.shape[0] < 3:
        raise ValueError("pose fitting needs at least 3 corners")
    if target.shape[0] != corners.shape[0]:
        raise LengthMismatch(
            f"{corners.shape[0]} corners vs {target.shape[0]} target points")
    return corners, target


def _pose_from_params(p) -> Pose:
    return Pose.of(AbcRotation(float(p[0]), float(p[1]), float(p[2])), p[3:6])


def _fit_pose_once(camera: CameraIntrinsics, corners: np.ndarray,
                   target: np.ndarray, init: Pose, cfg: FitConfig):
    def residual(p):
        return (project(camera, _pose_from_params(p), corners) - target).ravel()

    def jacobian(p):
        return projection_jacobian(camera, _pose_from_params(p), corners).reshape(-1, 6)

    x0 = np.concatenate([init.rotation.as_array(), init.translation_array()])
    return _levenberg_marquardt(residual, jacobian, x0, cfg)


def fit_pose(camera: CameraIntrinsics, corners, target, init: Pose,
             cfg: FitConfig = FitConfig()) -> FitReport:
    """Fit (a, b, c, tx, ty, tz) to observed corner projections.

    Converges when the loss drops below ``cfg.target_loss`` or an
    accepted step improves it by less than ``cfg.convergence_tol``.  If
    the solution drifts toward the 180-degree rotation singularity
    (Gibbs norm > 50) the fit is deterministically retried in a
    90-degree-rotated object frame and mapped back.
    """
    corners, target = _check_fit_inputs(corners, target)
    x, loss, iters, converged, trace, failure = _fit_pose_once(
        camera, corners, target, init, cfg)

    if failure is None and float(np.linalg.norm(x[:3])) > GIBBS_NORM_LIMIT:
        R_init = abc_to_rotation(init.rotation)
        for q in _FRAME_ROTATIONS:
            Q = abc_to_rotation(q)
            try:
                init_q = Pose.of(rotation_to_abc(R_init @ Q.T), init.translation)
            except SingularRotation:
                continue
            xq, lq, iq, cq, tq, fq = _fit_pose_once(
                camera, corners @ Q.T, target, init_q, cfg)
            if fq is not None or float(np.linalg.norm(xq[:3])) > GIBBS_NORM_LIMIT:
                continue
            try:
                abc_back = rotation_to_abc(
                    abc_to_rotation(AbcRotation(*xq[:3])) @ Q)
            except SingularRotation:
                continue
            pose = Pose.of(abc_back, xq[3:6])
            return FitReport(pose, lq, iq, cq, tuple(tq), fq)

    return FitReport(_pose_from_params(x), loss, iters, converged,
                     tuple(trace), failure)


def initial_pose_estimate(camera: CameraIntrinsics, corners, target) -> Pose:
    """Cold-start heuristic: identity rotation, translation on the ray of
    the observed centroid at a depth matching corner spread by similar
    triangles."""
    corners = np.asarray(corners, dtype=float).reshape(-1, 3)
    target = np.asarray(target, dtype=float).reshape(-1, 2)
    center = target.mean(axis=0)
    spread_px = float(np.sqrt(np.mean(np.sum((target - center) ** 2, axis=1))))
    spread_3d = float(np.sqrt(np.mean(np.sum(
        (corners - corners.mean(axis=0)) ** 2, axis=1))))
    f = 0.5 * (camera.fx + camera.fy)
    depth = f * spread_3d / spread_px if spread_px > 1e-9 else 1.0
    t = depth * np.array([(center[0] - camera.cx) / camera.fx,
                          (center[1] - camera.cy) / camera.fy, 1.0])
    return Pose.of(AbcRotation(0.0, 0.0, 0.0), t)


# ---------------------------------------------------------------------------
# Region-channel fitting


def _channel_translation_jacobian(cfg: GridDecodeConfig, camera: CameraIntrinsics,
                                  cell: RegionCellOutput) -> np.ndarray:
    """3x3 partials of the decoded translation w.r.t. (tu, tv, tw)."""
    t = decode_translation(cfg, camera, cell)
    z = t[2]
    su = sigmoid(cell.tu)
    sv = sigmoid(cell.tv)
    du_dtu = cfg.image_width * cfg.sigmoid_span * su * (1.0 - su) / cfg.grid_cols
    dv_dtv = cfg.image_height * cfg.sigmoid_span * sv * (1.0 - sv) / cfg.grid_rows
    return np.array([
        [z * du_dtu / camera.fx, 0.0, t[0]],
        [0.0, z * dv_dtv / camera.fy, t[1]],
        [0.0, 0.0, t[2]],
    ])


def _cell_with_params(cell: RegionCellOutput, q) -> RegionCellOutput:
    return replace(cell, abc=AbcRotation(float(q[0]), float(q[1]), float(q[2])),
                   tu=float(q[3]), tv=float(q[4]), tw=float(q[5]))


def region_projection_jacobian(cfg: GridDecodeConfig, camera: CameraIntrinsics,
                               corners, cell: RegionCellOutput) -> np.ndarray:
    """Per-corner 2x6 pixel Jacobians w.r.t. the raw channels
    (a, b, c, tu, tv, tw): the projection Jacobian chained through the
    sigmoid / exponential translation decode."""
    pose = Pose.of(cell.abc, decode_translation(cfg, camera, cell))
    J_pose = projection_jacobian(camera, pose, corners)
    T = _channel_translation_jacobian(cfg, camera, cell)
    J = np.empty_like(J_pose)
    J[:, :, :3] = J_pose[:, :, :3]
    J[:, :, 3:] = np.einsum("nij,jk->nik", J_pose[:, :, 3:], T)
    return J


def region_loss_gradient(cfg: GridDecodeConfig, camera: CameraIntrinsics,
                         corners, cell: RegionCellOutput, target) -> np.ndarray:
    """Gradient of the reprojection loss w.r.t. (a, b, c, tu, tv, tw)."""
    pose = Pose.of(cell.abc, decode_translation(cfg, camera, cell))
    pred = project(camera, pose, corners)
    target = np.asarray(target, dtype=float).reshape(-1, 2)
    if pred.shape != target.shape:
        raise LengthMismatch(
            f"point lists differ in length: {pred.shape[0]} vs {target.shape[0]}")
    J = region_projection_jacobian(cfg, camera, corners, cell)
    return 2.0 * np.einsum("nij,ni->j", J, pred - target)


def fit_region_channels(cfg: GridDecodeConfig, camera: CameraIntrinsics,
                        corners, target, init_cell: RegionCellOutput,
                        fit_cfg: FitConfig = FitConfig()) -> RegionFitResult:
    """Fit the raw channels (a, b, c, tu, tv, tw) of one grid cell.

    The owning cell is fixed; gradients flow through the full decode and
    projection chain.  Box, confidence, and class channels pass through
    untouched.
    """
    corners, target = _check_fit_inputs(corners, target)
    init_cell.validate(cfg)

    def residual(q):
        c = _cell_with_params(init_cell, q)
        pose = Pose.of(c.abc, decode_translation(cfg, camera, c))
        return (project(camera, pose, corners) - target).ravel()

    def jacobian(q):
        c = _cell_with_params(init_cell, q)
        return region_projection_jacobian(cfg, camera, corners, c).reshape(-1, 6)

    x0 = np.array([init_cell.abc.a, init_cell.abc.b, init_cell.abc.c,
                   init_cell.tu, init_cell.tv, init_cell.tw])
    x, loss, iters, converged, trace, failure = _levenberg_marquardt(
        residual, jacobian, x0, fit_cfg)

    final_cell = _cell_with_params(init_cell, x)
    pose = Pose.of(final_cell.abc, decode_translation(cfg, camera, final_cell))
    report = FitReport(pose, loss, iters, converged, tuple(trace), failure)
    return RegionFitResult(report, final_cell)
