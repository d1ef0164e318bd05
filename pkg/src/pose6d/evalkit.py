"""Metrics, synthetic scene generation, and ground-truth file ingestion.

Pose error metrics follow the usual 6D-pose conventions: mean 2D corner
reprojection error (pixels) with a 5-pixel accuracy flag, translational
error e_TE as Euclidean distance in centimeters, and rotational error
e_RE as the geodesic angle in degrees.

Ground-truth rotation/translation files are plain whitespace-separated
text: an optional "rows cols" header line of two integers, then 9 values
for a rotation matrix (row-major) or 3 for a translation.  Translations
are stored in centimeters on disk and converted to meters on load with
the factor recorded on the loaded object.
"""

from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .annotation import AxisAnnotation, ImageLine, PixelBox
from .errors import EmptySet, NonOrthonormal, ParseError
from .projection import CameraIntrinsics, Pose, box_corners, project
from .region import (GridDecodeConfig, RegionCellOutput, encode_translation,
                     logit, write_cell, empty_grid)
from .rotations import (AbcRotation, abc_to_rotation, nearest_rotation,
                        orthonormality_error, rotation_angle_between,
                        rotation_to_abc)

# Camera of the standard LineMod benchmark captures (pixels).
LINEMOD_CAMERA = CameraIntrinsics(fx=572.4114, fy=573.57043,
                                  cx=325.2611, cy=242.04899)
LINEMOD_IMAGE_SIZE = (640, 480)

# On-disk translation unit: centimeters -> meters.
TRANSLATION_UNIT_FACTOR = 0.01

# Parsed rotations farther than this from orthonormal are corrupt.
_ORTHONORMAL_REJECT = 1e-2
# Below this defect the matrix is kept bit-for-bit (no re-projection).
_ORTHONORMAL_KEEP = 1e-12


@dataclass(frozen=True)
class PoseErrorReport:
    """Per-pose error metrics; ``within_5px`` applies ``threshold`` to the
    mean corner error (max is reported as an auxiliary)."""

    mean_pixel_error: float
    max_pixel_error: float
    e_te: float  # centimeters
    e_re: float  # degrees
    within_5px: bool
    threshold: float = 5.0


def evaluate(camera: CameraIntrinsics, pred: Pose, gt: Pose, corners,
             threshold: float = 5.0) -> PoseErrorReport:
    """Compare a predicted pose against ground truth on the given corners."""
    pred_pts = project(camera, pred, corners)
    gt_pts = project(camera, gt, corners)
    dists = np.linalg.norm(pred_pts - gt_pts, axis=1)
    mean_err = float(dists.mean())
    e_te = float(np.linalg.norm(
        pred.translation_array() - gt.translation_array())) * 100.0
    e_re = rotation_angle_between(abc_to_rotation(pred.rotation),
                                  abc_to_rotation(gt.rotation))
    return PoseErrorReport(
        mean_pixel_error=mean_err,
        max_pixel_error=float(dists.max()),
        e_te=e_te,
        e_re=e_re,
        within_5px=bool(mean_err < threshold),
        threshold=float(threshold),
    )


def accuracy_over_set(reports: Sequence[PoseErrorReport]) -> float:
    """Fraction of reports whose mean corner error beat the threshold."""
    if not reports:
        raise EmptySet("no reports to aggregate")
    return sum(1 for r in reports if r.within_5px) / len(reports)


def accuracy_table_csv(groups: Sequence[tuple[str, Sequence[PoseErrorReport]]]) -> str:
    """CSV accuracy table: one row per named group plus an average row.

    Columns: object, mean pixel error, 5-pixel accuracy, e_TE (cm),
    e_RE (deg) — the usual benchmark table layout.
    """
    out = io.StringIO()
    out.write("object,mean_pixel_error,acc_5px,e_te_cm,e_re_deg\n")

    def write_row(name: str, reports: Sequence[PoseErrorReport]):
        out.write("%s,%.17g,%.17g,%.17g,%.17g\n" % (
            name,
            float(np.mean([r.mean_pixel_error for r in reports])),
            accuracy_over_set(reports),
            float(np.mean([r.e_te for r in reports])),
            float(np.mean([r.e_re for r in reports])),
        ))

    pooled: list[PoseErrorReport] = []
    for name, reports in groups:
        write_row(name, reports)
        pooled.extend(reports)
    write_row("average", pooled)
    return out.getvalue()


# ---------------------------------------------------------------------------
# Synthetic scenes


@dataclass(frozen=True)
class EncodedGrid:
    """A flat region-grid tensor holding exactly one encoded object."""

    config: GridDecodeConfig
    flat: np.ndarray
    cell_row: int
    cell_col: int
    anchor: int


@dataclass(frozen=True)
class SyntheticScene:
    """One synthetic observation: exact projections plus optional noise."""

    camera: CameraIntrinsics
    pose: Pose
    dims: tuple[float, float, float]
    corners: np.ndarray  # (8, 3)
    pts: np.ndarray      # (8, 2), exact projections of corners
    observed: np.ndarray  # pts with per-corner Gaussian pixel noise applied
    noise_sigma: float
    seed: int
    grid: EncodedGrid | None = None


def random_rotation_abc(rng: np.random.Generator,
                        max_angle_deg: float = 170.0) -> AbcRotation:
    """Uniform random axis, uniform angle in [0, max_angle_deg]."""
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.0, math.radians(max_angle_deg))
    return AbcRotation.from_array(math.tan(angle / 2.0) * axis)


def perturbed_pose(pose: Pose, rng: np.random.Generator,
                   max_angle_deg: float, max_shift_m: float) -> Pose:
    """Pose composed with a random rotation (bounded angle) and a random
    translation offset (bounded norm); used to build fit initializations."""
    delta = random_rotation_abc(rng, max_angle_deg)
    R = abc_to_rotation(delta) @ abc_to_rotation(pose.rotation)
    shift = rng.normal(size=3)
    shift *= rng.uniform(0.0, max_shift_m) / np.linalg.norm(shift)
    return Pose.of(rotation_to_abc(R), pose.translation_array() + shift)


def _grid_cell_for_scene(cfg: GridDecodeConfig, camera: CameraIntrinsics,
                         pose: Pose, pts: np.ndarray) -> RegionCellOutput:
    enc = encode_translation(cfg, camera, pose.translation_array())
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    center = (lo + hi) / 2.0
    size = np.maximum(hi - lo, 1e-6)

    def clamp01(x: float) -> float:
        return min(1.0 - 1e-6, max(1e-6, x))

    # Display-only box channels: sigmoid center within the owning cell
    # (clamped since the pose cell may not contain the box center).
    box2d = (
        logit(clamp01(center[0] * cfg.grid_cols / cfg.image_width - enc.cell_col)),
        logit(clamp01(center[1] * cfg.grid_rows / cfg.image_height - enc.cell_row)),
        math.log(size[0] * cfg.grid_cols / cfg.image_width),
        math.log(size[1] * cfg.grid_rows / cfg.image_height),
    )
    scores = tuple(3.0 if i == 0 else 0.0 for i in range(cfg.num_classes))
    return RegionCellOutput(
        cell_col=enc.cell_col, cell_row=enc.cell_row, anchor=0,
        box2d=box2d, tu=enc.tu, tv=enc.tv, tw=enc.tw,
        abc=pose.rotation, conf=3.0, class_scores=scores,
    )


def generate_scene(seed: int,
                   depth_range: tuple[float, float] = (0.6, 1.2),
                   extent_range: tuple[float, float] = (0.1, 0.3),
                   max_angle_deg: float = 170.0,
                   noise_sigma: float = 0.0,
                   camera: CameraIntrinsics = LINEMOD_CAMERA,
                   image_size: tuple[int, int] = LINEMOD_IMAGE_SIZE,
                   center_margin: float = 0.15,
                   grid_config: GridDecodeConfig | None = None) -> SyntheticScene:
    """Deterministic random scene: box dims, pose, exact projections,
    optional noisy observations and an optional encoded grid tensor.

    The object center is kept ``center_margin`` of the image away from
    the borders so the scene stays in-frustum and grid-encodable.
    """
    if not 0.0 < depth_range[0] <= depth_range[1]:
        raise ValueError("bad depth range")
    if not 0.0 < extent_range[0] <= extent_range[1]:
        raise ValueError("bad extent range")
    if not 0.0 <= max_angle_deg < 175.0:
        raise ValueError("max_angle_deg must be in [0, 175)")
    rng = np.random.default_rng(seed)
    W, H = image_size
    dims = tuple(float(d) for d in rng.uniform(*extent_range, size=3))
    rotation = random_rotation_abc(rng, max_angle_deg)
    depth = rng.uniform(*depth_range)
    u = rng.uniform(center_margin * W, (1.0 - center_margin) * W)
    v = rng.uniform(center_margin * H, (1.0 - center_margin) * H)
    t = depth * np.array([(u - camera.cx) / camera.fx,
                          (v - camera.cy) / camera.fy, 1.0])
    pose = Pose.of(rotation, t)
    corners = box_corners(*dims)
    pts = project(camera, pose, corners)
    observed = pts + rng.normal(0.0, noise_sigma, size=pts.shape) \
        if noise_sigma > 0.0 else pts.copy()

    grid = None
    if grid_config is not None:
        cell = _grid_cell_for_scene(grid_config, camera, pose, pts)
        flat = empty_grid(grid_config)
        write_cell(grid_config, flat, cell)
        grid = EncodedGrid(grid_config, flat, cell.cell_row, cell.cell_col,
                           cell.anchor)
    return SyntheticScene(camera, pose, dims, corners, pts, observed,
                          float(noise_sigma), int(seed), grid)


# ---------------------------------------------------------------------------
# Synthetic annotations (exact axis lines and box tangencies for a pose)


def synthetic_axis_annotation(camera: CameraIntrinsics, pose: Pose) -> AxisAnnotation:
    """Exact drawn-axis annotation for a known pose.

    Each line joins the object's image point with the vanishing point of
    that object axis, so every point of the 3D axis projects onto it
    exactly.  Raises ValueError when an axis points down the viewing ray
    (its projection degenerates to a point and no line is defined).
    """
    K = camera.matrix()
    R = abc_to_rotation(pose.rotation)
    origin_h = K @ pose.translation_array()
    lines = []
    for i in range(3):
        vanish_h = K @ R[:, i]
        coeffs = np.cross(origin_h, vanish_h)
        if np.linalg.norm(coeffs[:2]) < 1e-9 * np.linalg.norm(origin_h) \
                * np.linalg.norm(vanish_h):
            raise ValueError(f"object axis {i} projects to a point")
        lines.append(ImageLine.from_coefficients(*coeffs))
    return AxisAnnotation.canonical(*lines)


def bounding_box_of(pts) -> PixelBox:
    """Tight axis-aligned pixel box around projected points."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    return PixelBox(left=float(pts[:, 0].min()), right=float(pts[:, 0].max()),
                    top=float(pts[:, 1].min()), bottom=float(pts[:, 1].max()))


# ---------------------------------------------------------------------------
# Ground-truth file IO


@dataclass(frozen=True)
class GroundTruthPoseFile:
    """Parsed rot/tra file pair.

    ``rotation`` is re-orthonormalized when file precision broke
    orthonormality; ``translation`` is in meters, converted from the
    on-disk centimeters (raw values kept in ``translation_cm``).
    """

    rotation: np.ndarray
    translation: tuple[float, float, float]
    translation_cm: tuple[float, float, float]
    unit_factor: float = TRANSLATION_UNIT_FACTOR

    def pose(self) -> Pose:
        return Pose.of(rotation_to_abc(self.rotation), self.translation)


def _parse_values(path, count: int) -> list[float]:
    """Whitespace-separated reals with an optional two-integer header."""
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    tokens: list[tuple[float, int, int]] = []
    last_line, last_col = 1, 1
    for lineno, line in enumerate(text.splitlines(), start=1):
        for m in re.finditer(r"\S+", line):
            try:
                value = float(m.group(0))
            except ValueError:
                raise ParseError(f"not a number: {m.group(0)!r}",
                                 lineno, m.start() + 1)
            if not math.isfinite(value):
                raise ParseError(f"non-finite value {m.group(0)!r}",
                                 lineno, m.start() + 1)
            tokens.append((value, lineno, m.start() + 1))
            last_line, last_col = lineno, m.start() + 1
    if len(tokens) == count + 2:
        header = tokens[:2]
        for value, lineno, col in header:
            if value != int(value):
                raise ParseError("header must hold two integers", lineno, col)
        tokens = tokens[2:]
    if len(tokens) != count:
        raise ParseError(f"expected {count} values, found {len(tokens)}",
                         last_line, last_col)
    return [t[0] for t in tokens]


def load_ground_truth(rot_path, tra_path) -> GroundTruthPoseFile:
    """Load a rot/tra file pair; repairs mild non-orthonormality, rejects
    corrupt rotations (defect above 1e-2 or negative determinant)."""
    R = np.array(_parse_values(rot_path, 9)).reshape(3, 3)
    tra_cm = _parse_values(tra_path, 3)
    defect = orthonormality_error(R)
    if defect > _ORTHONORMAL_REJECT or np.linalg.det(R) < 0.0:
        raise NonOrthonormal(
            f"rotation defect {defect:g} exceeds {_ORTHONORMAL_REJECT:g} "
            f"or determinant is negative")
    if defect > _ORTHONORMAL_KEEP:
        R = nearest_rotation(R)
    return GroundTruthPoseFile(
        rotation=R,
        translation=tuple(v * TRANSLATION_UNIT_FACTOR for v in tra_cm),
        translation_cm=tuple(tra_cm),
    )


def save_ground_truth(rot_path, tra_path, rotation, translation_cm) -> None:
    """Emit a rot/tra file pair; translation is given in centimeters
    (on-disk units).  Values are written with 17 significant digits so a
    reload reproduces them bit-for-bit."""
    R = np.asarray(rotation, dtype=float).reshape(3, 3)
    t_cm = np.asarray(translation_cm, dtype=float).reshape(3)
    with open(rot_path, "w", encoding="ascii") as fh:
        fh.write("3 3\n")
        for row in R:
            fh.write(" ".join("%.17g" % v for v in row) + "\n")
    with open(tra_path, "w", encoding="ascii") as fh:
        fh.write("3 1\n")
        for v in t_cm:
            fh.write("%.17g\n" % v)
