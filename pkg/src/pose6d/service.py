"""Stateless HTTP service exposing the toolkit over JSON.

Endpoints (all bodies and results use the shared JSON value encodings):

    GET  /health             liveness probe
    POST /project            cube corners, edges, and axis arrows in pixels
    POST /solve/rotation     rotation from three drawn axis lines
    POST /solve/translation  translation from a 2D box (tangent assignment)
    POST /fit                pose fit to observed corner projections

Every response body is ``{"ok": true, "result": ...}`` or
``{"ok": false, "error": {"code": ..., "message": ...}}``.  Schema
violations are 400, solver failures 422, oversized requests 413.
Handlers are pure functions of the request body; the service keeps no
per-session state, so requests may be issued concurrently and in any
order.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from . import jsonio
from .annotation import (AxisAnnotation, assign_tangent_corners,
                         solve_rotation_from_axes, translation_init_from_box)
from .errors import Pose6dError
from .fitting import (fit_pose, fit_region_channels, initial_pose_estimate)
from .projection import BOX_EDGES, box_corners, project
from .region import GridDecodeConfig, RegionCellOutput, encode_translation
from .rotations import AbcRotation, abc_to_rotation

MAX_REQUEST_BYTES = 1_000_000


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CameraModel(_Strict):
    fx: float
    fy: float
    cx: float
    cy: float


class AbcModel(_Strict):
    a: float
    b: float
    c: float


class PoseModel(_Strict):
    rotation: AbcModel
    translation: list[float] = Field(min_length=3, max_length=3)


class LineModel(_Strict):
    la: float
    lb: float
    lc: float


class AxisModel(_Strict):
    dir: list[float] = Field(min_length=3, max_length=3)
    line: LineModel


class BoxModel(_Strict):
    l: float
    r: float
    t: float
    b: float


class DimsModel(_Strict):
    length: float
    width: float
    height: float


class GridModel(_Strict):
    image_width: int
    image_height: int
    grid_cols: int
    grid_rows: int
    sigmoid_span: float = 4.0
    depth_base: float = 1.0
    num_anchors: int = 5
    num_classes: int = 1


class FitOptionsModel(_Strict):
    max_iters: int | None = None
    initial_lambda: float | None = None
    lambda_up: float | None = None
    lambda_down: float | None = None
    lambda_max: float | None = None
    convergence_tol: float | None = None
    target_loss: float | None = None


class ProjectRequest(_Strict):
    camera: CameraModel
    pose: PoseModel
    dims: DimsModel
    axis_length: float | None = None


class RotationSolveRequest(_Strict):
    camera: CameraModel
    axes: list[AxisModel] = Field(min_length=3, max_length=3)
    init: AbcModel | None = None


class TranslationSolveRequest(_Strict):
    camera: CameraModel
    rotation: list[float] = Field(min_length=9, max_length=9)
    box: BoxModel
    dims: DimsModel
    init_translation: list[float] | None = Field(default=None, min_length=3,
                                                 max_length=3)


class FitRequest(_Strict):
    camera: CameraModel
    target: list[list[float]] = Field(min_length=3)
    corners: list[list[float]] | None = Field(default=None, min_length=3)
    dims: DimsModel | None = None
    init: PoseModel | None = None
    config: FitOptionsModel | None = None
    space: str = "direct_pose"
    grid: GridModel | None = None


def _camera(m: CameraModel):
    return jsonio.camera_from_json(m.model_dump())


def _pose(m: PoseModel):
    return jsonio.pose_from_json(m.model_dump())


def _dims(m: DimsModel):
    return jsonio.dims_from_json(m.model_dump())


def _fit_config(m: FitOptionsModel | None):
    if m is None:
        return jsonio.fit_config_from_json({})
    return jsonio.fit_config_from_json(
        {k: v for k, v in m.model_dump().items() if v is not None})


def _ok(result) -> JSONResponse:
    return JSONResponse(content={"ok": True, "result": result})


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={
        "ok": False, "error": {"code": code, "message": message}})


def create_app(grid_defaults: GridDecodeConfig | None = None) -> FastAPI:
    """Build the service; ``grid_defaults`` backs /fit region requests
    that do not carry their own grid config."""
    app = FastAPI(title="pose6d", docs_url=None, redoc_url=None)

    @app.middleware("http")
    async def cap_request_size(request: Request, call_next):
        length = request.headers.get("content-length")
        if length is not None and int(length) > MAX_REQUEST_BYTES:
            return _error(413, "request_too_large",
                          f"request exceeds {MAX_REQUEST_BYTES} bytes")
        return await call_next(request)

    @app.exception_handler(RequestValidationError)
    async def on_schema_violation(request: Request, exc: RequestValidationError):
        return _error(400, "schema_violation", str(exc.errors()))

    @app.exception_handler(Pose6dError)
    async def on_solver_error(request: Request, exc: Pose6dError):
        return _error(422, exc.code, str(exc))

    @app.exception_handler(ValueError)
    async def on_value_error(request: Request, exc: ValueError):
        return _error(422, "invalid_value", str(exc))

    @app.get("/health")
    async def health():
        return _ok({"status": "ok"})

    @app.post("/project")
    async def project_cube(body: ProjectRequest):
        camera = _camera(body.camera)
        pose = _pose(body.pose)
        dims = _dims(body.dims)
        corners = box_corners(*dims)
        pts = project(camera, pose, corners)
        length = body.axis_length if body.axis_length is not None \
            else 0.75 * max(dims)
        axis_pts = project(camera, pose,
                           np.vstack([np.zeros(3), np.eye(3) * length]))
        axes = {name: [list(map(float, axis_pts[0])),
                       list(map(float, axis_pts[i + 1]))]
                for i, name in enumerate(("x", "y", "z"))}
        return _ok({
            "corners": jsonio.points_to_json(pts),
            "edges": [list(e) for e in BOX_EDGES],
            "axes": axes,
        })

    @app.post("/solve/rotation")
    async def solve_rotation(body: RotationSolveRequest):
        camera = _camera(body.camera)
        ann = AxisAnnotation(
            tuple(tuple(float(v) for v in a.dir) for a in body.axes),
            tuple(jsonio.line_from_json(a.line.model_dump())
                  for a in body.axes))
        init = jsonio.abc_from_json(body.init.model_dump()) \
            if body.init is not None else AbcRotation(0.0, 0.0, 0.0)
        result = solve_rotation_from_axes(camera, ann, init)
        return _ok({
            "rotation": jsonio.abc_to_json(result.rotation),
            "rotation_matrix": jsonio.rotation_to_json(
                abc_to_rotation(result.rotation)),
            "residual": result.residual,
            "converged": result.converged,
            "multistart_used": result.multistart_used,
        })

    @app.post("/solve/translation")
    async def solve_translation(body: TranslationSolveRequest):
        camera = _camera(body.camera)
        R = jsonio.rotation_from_json(body.rotation)
        box = jsonio.box_from_json(body.box.model_dump())
        dims = _dims(body.dims)
        t_init = np.asarray(body.init_translation, dtype=float) \
            if body.init_translation is not None \
            else translation_init_from_box(camera, dims, box)
        result = assign_tangent_corners(camera, R, dims, box, t_init)
        return _ok({
            "translation": [float(v) for v in result.translation],
            "iterations": result.iterations,
            "converged": result.converged,
            "tangency": jsonio.tangency_to_json(result.tangency),
        })

    @app.post("/fit")
    async def fit(body: FitRequest):
        camera = _camera(body.camera)
        target = jsonio.points_from_json(body.target, 2)
        if body.corners is not None:
            corners = jsonio.points_from_json(body.corners, 3)
        elif body.dims is not None:
            corners = box_corners(*_dims(body.dims))
        else:
            return _error(400, "schema_violation",
                          "fit needs either corners or dims")
        init = _pose(body.init) if body.init is not None \
            else initial_pose_estimate(camera, corners, target)
        cfg = _fit_config(body.config)

        if body.space == "direct_pose":
            report = fit_pose(camera, corners, target, init, cfg)
            return _ok(jsonio.fit_report_to_json(report))
        if body.space == "region_channels":
            grid = jsonio.grid_config_from_json(body.grid.model_dump()) \
                if body.grid is not None else grid_defaults
            if grid is None:
                return _error(400, "schema_violation",
                              "region fit needs a grid config")
            enc = encode_translation(grid, camera, init.translation_array())
            cell = RegionCellOutput(
                cell_col=enc.cell_col, cell_row=enc.cell_row, anchor=0,
                box2d=(0.0, 0.0, 0.0, 0.0), tu=enc.tu, tv=enc.tv, tw=enc.tw,
                abc=init.rotation, conf=0.0,
                class_scores=(0.0,) * grid.num_classes)
            result = fit_region_channels(grid, camera, corners, target, cell,
                                         cfg)
            out = jsonio.fit_report_to_json(result.report)
            out["channels"] = {
                "cell_col": result.cell.cell_col,
                "cell_row": result.cell.cell_row,
                "abc": jsonio.abc_to_json(result.cell.abc),
                "tu": result.cell.tu, "tv": result.cell.tv,
                "tw": result.cell.tw,
            }
            return _ok(out)
        return _error(400, "schema_violation",
                      f"unknown fit space {body.space!r}")

    return app
