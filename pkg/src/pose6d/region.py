"""Region-grid pose codec: raw per-cell channel values <-> metric 6D poses.

A detection grid of ``grid_rows x grid_cols`` cells carries, per anchor,
the channel block [box2d(4), a, b, c, tu, tv, tw, conf, class_scores].
Translation decoding:

    du = s * sigmoid(tu)          (cells, in (0, s))
    dv = s * sigmoid(tv)
    u  = W * (col + 0.5 + du) / w   (pixels; likewise v with rows)
    z  = depth_base * exp(tw)       (meters)
    t  = z * ((u - cx) / fx, (v - cy) / fy, 1)

Rotation channels are the abc encoding taken verbatim.  Anchors carry no
pose priors; the anchor index is bookkeeping only.  Box channels are
decoded for display only and play no role in pose math.

Flat grid layout (the wire format for whole grids): cells in row-major
order, anchors consecutive within a cell, the channel block above
consecutive within an anchor::

    index(row, col, anchor, ch) =
        ((row * grid_cols + col) * num_anchors + anchor) * channels + ch
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import EmptyGrid, OutOfFrustum, UnencodableOffset
from .projection import CameraIntrinsics, Pose
from .rotations import AbcRotation


def sigmoid(x: float) -> float:
    """Logistic function, stable for large |x|."""
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def logit(p: float) -> float:
    """Inverse logistic; requires p in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"logit argument must be in (0, 1), got {p}")
    return math.log(p / (1.0 - p))


@dataclass(frozen=True)
class GridDecodeConfig:
    """Grid geometry and decode constants."""

    image_width: int
    image_height: int
    grid_cols: int
    grid_rows: int
    sigmoid_span: float = 4.0
    depth_base: float = 1.0
    num_anchors: int = 5
    num_classes: int = 1

    def __post_init__(self):
        for name in ("image_width", "image_height", "grid_cols", "grid_rows",
                     "num_anchors", "num_classes"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
            object.__setattr__(self, name, int(getattr(self, name)))
        if not self.sigmoid_span > 0.0:
            raise ValueError("sigmoid_span must be positive")
        if not self.depth_base > 0.0:
            raise ValueError("depth_base must be positive")

    @property
    def channels_per_anchor(self) -> int:
        return 4 + 3 + 3 + 1 + self.num_classes

    @property
    def flat_length(self) -> int:
        return self.grid_rows * self.grid_cols * self.num_anchors * self.channels_per_anchor


@dataclass(frozen=True)
class RegionCellOutput:
    """Raw channel values of one (cell, anchor) slot."""

    cell_col: int
    cell_row: int
    anchor: int
    box2d: tuple[float, float, float, float]
    tu: float
    tv: float
    tw: float
    abc: AbcRotation
    conf: float
    class_scores: tuple[float, ...]

    def validate(self, cfg: GridDecodeConfig) -> "RegionCellOutput":
        if not 0 <= self.cell_col < cfg.grid_cols:
            raise ValueError(f"cell_col {self.cell_col} outside grid")
        if not 0 <= self.cell_row < cfg.grid_rows:
            raise ValueError(f"cell_row {self.cell_row} outside grid")
        if not 0 <= self.anchor < cfg.num_anchors:
            raise ValueError(f"anchor {self.anchor} outside anchor set")
        if len(self.class_scores) != cfg.num_classes:
            raise ValueError("class score count does not match config")
        return self


def decode_translation(cfg: GridDecodeConfig, camera: CameraIntrinsics,
                       cell: RegionCellOutput) -> np.ndarray:
    """Metric translation (meters) encoded by a cell's tu, tv, tw channels."""
    cell.validate(cfg)
    du = cfg.sigmoid_span * sigmoid(cell.tu)
    dv = cfg.sigmoid_span * sigmoid(cell.tv)
    u = cfg.image_width * (cell.cell_col + 0.5 + du) / cfg.grid_cols
    v = cfg.image_height * (cell.cell_row + 0.5 + dv) / cfg.grid_rows
    z = cfg.depth_base * math.exp(cell.tw)
    return np.array([
        z * (u - camera.cx) / camera.fx,
        z * (v - camera.cy) / camera.fy,
        z,
    ])


@dataclass(frozen=True)
class EncodedTranslation:
    """Cell assignment plus raw channels produced by encode_translation."""

    cell_col: int
    cell_row: int
    tu: float
    tv: float
    tw: float


def _pick_cell(grid_coord: float, n_cells: int, span: float) -> int:
    """Owning cell for a grid-space coordinate.

    The sub-cell offset ``d = grid_coord - cell - 0.5`` must land in
    (0, span); among valid cells we pick the one whose offset is closest
    to span/2, i.e. where the sigmoid channel is best conditioned.
    Deterministic tie-break: the smaller cell index.
    """
    best, best_score = None, None
    lo = max(0, int(math.floor(grid_coord - 0.5 - span)))
    hi = min(n_cells - 1, int(math.ceil(grid_coord - 0.5)))
    for cell in range(lo, hi + 1):
        d = grid_coord - cell - 0.5
        if not 0.0 < d < span:
            continue
        score = abs(d / span - 0.5)
        if best_score is None or score < best_score - 1e-15:
            best, best_score = cell, score
    if best is None:
        raise UnencodableOffset(
            f"no cell yields a sub-cell offset in (0, {span}) for grid "
            f"coordinate {grid_coord:g}")
    return best


def encode_translation(cfg: GridDecodeConfig, camera: CameraIntrinsics,
                       t) -> EncodedTranslation:
    """Exact inverse of :func:`decode_translation`.

    Raises OutOfFrustum when the point is behind the camera or projects
    outside the image; UnencodableOffset when no cell can own it.
    """
    t = np.asarray(t, dtype=float).reshape(3)
    if t[2] <= 0.0:
        raise OutOfFrustum(f"translation depth {t[2]:g} is not positive")
    u = camera.cx + camera.fx * t[0] / t[2]
    v = camera.cy + camera.fy * t[1] / t[2]
    if not (0.0 <= u < cfg.image_width and 0.0 <= v < cfg.image_height):
        raise OutOfFrustum(f"projected origin ({u:g}, {v:g}) falls outside "
                           f"the {cfg.image_width}x{cfg.image_height} image")
    gu = u * cfg.grid_cols / cfg.image_width
    gv = v * cfg.grid_rows / cfg.image_height
    col = _pick_cell(gu, cfg.grid_cols, cfg.sigmoid_span)
    row = _pick_cell(gv, cfg.grid_rows, cfg.sigmoid_span)
    return EncodedTranslation(
        cell_col=col,
        cell_row=row,
        tu=logit((gu - col - 0.5) / cfg.sigmoid_span),
        tv=logit((gv - row - 0.5) / cfg.sigmoid_span),
        tw=math.log(t[2] / cfg.depth_base),
    )


def decode_pose(cfg: GridDecodeConfig, camera: CameraIntrinsics,
                cell: RegionCellOutput) -> Pose:
    """Pose from one cell: abc channels verbatim, translation decoded."""
    t = decode_translation(cfg, camera, cell)
    return Pose.of(cell.abc, t)


def select_best_cell(cells: Iterable[RegionCellOutput]) -> RegionCellOutput:
    """Cell/anchor with maximal confidence.

    The confidence channel is compared raw: the sigmoid is strictly
    monotone, so the argmax is the same.  Ties break lexicographically by
    (row, col, anchor).
    """
    cells = list(cells)
    if not cells:
        raise EmptyGrid("no cells to select from")
    return min(cells, key=lambda c: (-c.conf, c.cell_row, c.cell_col, c.anchor))


def decode_box2d(cfg: GridDecodeConfig, cell: RegionCellOutput) -> tuple[float, float, float, float]:
    """Display-only 2D box (center u, center v, width, height) in pixels.

    Standard center/size convention: sigmoid center offset within the
    cell, exponential size with a one-cell prior.  Not used in pose math.
    """
    bx, by, bw, bh = cell.box2d
    u = cfg.image_width * (cell.cell_col + sigmoid(bx)) / cfg.grid_cols
    v = cfg.image_height * (cell.cell_row + sigmoid(by)) / cfg.grid_rows
    w = cfg.image_width * math.exp(bw) / cfg.grid_cols
    h = cfg.image_height * math.exp(bh) / cfg.grid_rows
    return (u, v, w, h)


# ---------------------------------------------------------------------------
# Flat grid tensors


def empty_grid(cfg: GridDecodeConfig) -> np.ndarray:
    """All-zero flat grid of the configured length."""
    return np.zeros(cfg.flat_length)


def _slot_offset(cfg: GridDecodeConfig, row: int, col: int, anchor: int) -> int:
    if not (0 <= row < cfg.grid_rows and 0 <= col < cfg.grid_cols
            and 0 <= anchor < cfg.num_anchors):
        raise IndexError(f"slot ({row}, {col}, {anchor}) outside grid")
    return ((row * cfg.grid_cols + col) * cfg.num_anchors + anchor) * cfg.channels_per_anchor


def read_cell(cfg: GridDecodeConfig, flat, row: int, col: int,
              anchor: int) -> RegionCellOutput:
    """Unpack one (cell, anchor) channel block from a flat grid."""
    flat = np.asarray(flat, dtype=float)
    if flat.size != cfg.flat_length:
        raise ValueError(f"flat grid has {flat.size} values, expected {cfg.flat_length}")
    o = _slot_offset(cfg, row, col, anchor)
    ch = flat[o:o + cfg.channels_per_anchor]
    return RegionCellOutput(
        cell_col=col, cell_row=row, anchor=anchor,
        box2d=tuple(float(x) for x in ch[0:4]),
        abc=AbcRotation(float(ch[4]), float(ch[5]), float(ch[6])),
        tu=float(ch[7]), tv=float(ch[8]), tw=float(ch[9]),
        conf=float(ch[10]),
        class_scores=tuple(float(x) for x in ch[11:11 + cfg.num_classes]),
    )


def write_cell(cfg: GridDecodeConfig, flat: np.ndarray, cell: RegionCellOutput) -> None:
    """Pack one cell's channels into a flat grid, in place."""
    cell.validate(cfg)
    if flat.size != cfg.flat_length:
        raise ValueError(f"flat grid has {flat.size} values, expected {cfg.flat_length}")
    o = _slot_offset(cfg, cell.cell_row, cell.cell_col, cell.anchor)
    ch = np.concatenate([
        np.asarray(cell.box2d, dtype=float),
        cell.abc.as_array(),
        [cell.tu, cell.tv, cell.tw, cell.conf],
        np.asarray(cell.class_scores, dtype=float),
    ])
    flat[o:o + cfg.channels_per_anchor] = ch


def iter_cells(cfg: GridDecodeConfig, flat) -> Iterator[RegionCellOutput]:
    """All (cell, anchor) slots of a flat grid in (row, col, anchor) order."""
    for row in range(cfg.grid_rows):
        for col in range(cfg.grid_cols):
            for anchor in range(cfg.num_anchors):
                yield read_cell(cfg, flat, row, col, anchor)
