"""Shared JSON value encodings.

All floats survive a JSON round trip exactly: Python's ``json`` module
serializes floats with ``repr``, the shortest string (at most 17
significant digits) that parses back to the identical value.  The CLI
and the HTTP service both use these encoders, so their outputs are
bit-for-bit equal to direct library results.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .annotation import (AxisAnnotation, BoxTangency, ImageLine, PixelBox,
                         Side, TangencyConstraint)
from .evalkit import EncodedGrid, PoseErrorReport, SyntheticScene
from .fitting import FitConfig, FitReport
from .projection import CameraIntrinsics, Pose
from .region import GridDecodeConfig
from .rotations import AbcRotation


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=False)


def abc_to_json(r: AbcRotation) -> dict:
    return {"a": r.a, "b": r.b, "c": r.c}


def abc_from_json(d: dict) -> AbcRotation:
    return AbcRotation(float(d["a"]), float(d["b"]), float(d["c"]))


def rotation_to_json(R) -> list[float]:
    """Rotation matrix as a 9-element row-major array."""
    return [float(v) for v in np.asarray(R, dtype=float).reshape(9)]


def rotation_from_json(values) -> np.ndarray:
    R = np.asarray([float(v) for v in values], dtype=float)
    if R.size != 9:
        raise ValueError("rotation matrix needs exactly 9 values")
    return R.reshape(3, 3)


def camera_to_json(k: CameraIntrinsics) -> dict:
    return {"fx": k.fx, "fy": k.fy, "cx": k.cx, "cy": k.cy}


def camera_from_json(d: dict) -> CameraIntrinsics:
    return CameraIntrinsics(fx=float(d["fx"]), fy=float(d["fy"]),
                            cx=float(d["cx"]), cy=float(d["cy"]))


def pose_to_json(p: Pose) -> dict:
    return {"rotation": abc_to_json(p.rotation),
            "translation": [float(v) for v in p.translation]}


def pose_from_json(d: dict) -> Pose:
    return Pose.of(abc_from_json(d["rotation"]),
                   [float(v) for v in d["translation"]])


def points_to_json(pts) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.asarray(pts, dtype=float)]


def points_from_json(values, dim: int) -> np.ndarray:
    pts = np.asarray([[float(v) for v in row] for row in values], dtype=float)
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise ValueError(f"expected rows of {dim} coordinates")
    return pts


def dims_to_json(dims) -> dict:
    length, width, height = (float(v) for v in dims)
    return {"length": length, "width": width, "height": height}


def dims_from_json(d: dict) -> tuple[float, float, float]:
    return (float(d["length"]), float(d["width"]), float(d["height"]))


def line_to_json(line: ImageLine) -> dict:
    return {"la": line.la, "lb": line.lb, "lc": line.lc}


def line_from_json(d: dict) -> ImageLine:
    return ImageLine(float(d["la"]), float(d["lb"]), float(d["lc"]))


def box_to_json(box: PixelBox) -> dict:
    return {"l": box.left, "r": box.right, "t": box.top, "b": box.bottom}


def box_from_json(d: dict) -> PixelBox:
    return PixelBox(left=float(d["l"]), right=float(d["r"]),
                    top=float(d["t"]), bottom=float(d["b"]))


def annotation_to_json(ann: AxisAnnotation, box: PixelBox, dims) -> dict:
    """The annotation contract shared with the labeling UI."""
    return {
        "axes": [{"dir": [float(v) for v in d], "line": line_to_json(line)}
                 for d, line in zip(ann.axis_dirs, ann.lines)],
        "box": box_to_json(box),
        "dims": dims_to_json(dims),
    }


def annotation_from_json(d: dict) -> tuple[AxisAnnotation, PixelBox,
                                           tuple[float, float, float]]:
    axes = d["axes"]
    if len(axes) != 3:
        raise ValueError("annotation needs exactly three axes")
    ann = AxisAnnotation(
        tuple(tuple(float(v) for v in a["dir"]) for a in axes),
        tuple(line_from_json(a["line"]) for a in axes),
    )
    return ann, box_from_json(d["box"]), dims_from_json(d["dims"])


def tangency_to_json(tang: BoxTangency) -> list[dict]:
    return [{"side": c.side.value, "edge_coord": c.edge_coord,
             "model_point": [float(v) for v in c.model_point]}
            for c in tang.constraints]


def tangency_from_json(values) -> BoxTangency:
    return BoxTangency(tuple(
        TangencyConstraint(Side(c["side"]), float(c["edge_coord"]),
                           tuple(float(v) for v in c["model_point"]))
        for c in values))


def fit_config_from_json(d: dict) -> FitConfig:
    kwargs = {}
    for field in ("max_iters",):
        if field in d:
            kwargs[field] = int(d[field])
    for field in ("initial_lambda", "lambda_up", "lambda_down", "lambda_max",
                  "convergence_tol", "target_loss"):
        if field in d:
            kwargs[field] = float(d[field])
    if "param_space" in d:
        kwargs["param_space"] = str(d["param_space"])
    return FitConfig(**kwargs)


def fit_report_to_json(report: FitReport) -> dict:
    return {
        "final_pose": pose_to_json(report.final_pose),
        "final_loss": report.final_loss,
        "iters": report.iters,
        "converged": report.converged,
        "loss_trace": list(report.loss_trace),
        "failure": report.failure,
    }


def grid_config_to_json(cfg: GridDecodeConfig) -> dict:
    return {
        "image_width": cfg.image_width, "image_height": cfg.image_height,
        "grid_cols": cfg.grid_cols, "grid_rows": cfg.grid_rows,
        "sigmoid_span": cfg.sigmoid_span, "depth_base": cfg.depth_base,
        "num_anchors": cfg.num_anchors, "num_classes": cfg.num_classes,
    }


def grid_config_from_json(d: dict) -> GridDecodeConfig:
    return GridDecodeConfig(
        image_width=int(d["image_width"]), image_height=int(d["image_height"]),
        grid_cols=int(d["grid_cols"]), grid_rows=int(d["grid_rows"]),
        sigmoid_span=float(d.get("sigmoid_span", 4.0)),
        depth_base=float(d.get("depth_base", 1.0)),
        num_anchors=int(d.get("num_anchors", 5)),
        num_classes=int(d.get("num_classes", 1)),
    )


def scene_to_json(scene: SyntheticScene) -> dict:
    out = {
        "camera": camera_to_json(scene.camera),
        "pose": pose_to_json(scene.pose),
        "dims": dims_to_json(scene.dims),
        "corners": points_to_json(scene.corners),
        "pts": points_to_json(scene.pts),
        "observed": points_to_json(scene.observed),
        "noise_sigma": scene.noise_sigma,
        "seed": scene.seed,
        "grid": None,
    }
    if scene.grid is not None:
        out["grid"] = {
            "config": grid_config_to_json(scene.grid.config),
            "flat": [float(v) for v in scene.grid.flat],
            "cell": {"row": scene.grid.cell_row, "col": scene.grid.cell_col,
                     "anchor": scene.grid.anchor},
        }
    return out


def scene_from_json(d: dict) -> SyntheticScene:
    grid = None
    if d.get("grid") is not None:
        g = d["grid"]
        grid = EncodedGrid(
            config=grid_config_from_json(g["config"]),
            flat=np.asarray([float(v) for v in g["flat"]], dtype=float),
            cell_row=int(g["cell"]["row"]), cell_col=int(g["cell"]["col"]),
            anchor=int(g["cell"]["anchor"]),
        )
    return SyntheticScene(
        camera=camera_from_json(d["camera"]),
        pose=pose_from_json(d["pose"]),
        dims=dims_from_json(d["dims"]),
        corners=points_from_json(d["corners"], 3),
        pts=points_from_json(d["pts"], 2),
        observed=points_from_json(d["observed"], 2),
        noise_sigma=float(d["noise_sigma"]),
        seed=int(d["seed"]),
        grid=grid,
    )


def error_report_to_json(report: PoseErrorReport) -> dict:
    return {
        "mean_pixel_error": report.mean_pixel_error,
        "max_pixel_error": report.max_pixel_error,
        "e_te_cm": report.e_te,
        "e_re_deg": report.e_re,
        "within_5px": report.within_5px,
        "threshold": report.threshold,
    }
