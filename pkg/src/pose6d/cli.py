"""Command-line surface of the toolkit.

Subcommands: ``fit`` (pose from observed corner projections), ``gen``
(synthetic scene + ground-truth files), ``eval`` (accuracy tables from
prediction/ground-truth directories), ``solve-annotation`` (pose from a
drawn-axes annotation), ``bench`` (timing budgets), and ``serve`` (the
HTTP service).

Exit codes: 0 success, 2 argument/parse errors, 3 solver failure or
non-convergence, 4 unmatched prediction/ground-truth stems.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from . import jsonio
from .annotation import (assign_tangent_corners, solve_rotation_from_axes,
                         translation_init_from_box)
from .errors import Pose6dError
from .evalkit import (LINEMOD_CAMERA, accuracy_over_set, accuracy_table_csv,
                      evaluate, generate_scene, load_ground_truth,
                      save_ground_truth)
from .fitting import (FitConfig, fit_pose, fit_region_channels,
                      initial_pose_estimate)
from .projection import box_corners, project
from .region import (GridDecodeConfig, RegionCellOutput, decode_pose,
                     encode_translation, iter_cells, read_cell,
                     select_best_cell)
from .rotations import abc_to_rotation

# Desk-scale performance budgets (see `bench`).
DECODE_PROJECT_BUDGET_US = 50.0
FIT_BUDGET_MS = 50.0

DEFAULT_PORT_ENV = "POSE6D_PORT"


def _load_json_arg(value: str):
    """Accept either a path to a JSON file or an inline JSON literal."""
    text = value.strip()
    if text.startswith("{") or text.startswith("["):
        return json.loads(text)
    with open(value, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _parse_dims(value: str) -> tuple[float, float, float]:
    parts = value.lower().split("x")
    if len(parts) != 3:
        raise ValueError(f"dims must look like 0.2x0.1x0.3, got {value!r}")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


def _emit(payload: dict, out: str | None) -> None:
    text = jsonio.dumps(payload)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _fit_config_from_args(args) -> FitConfig:
    overrides = {}
    if args.max_iters is not None:
        overrides["max_iters"] = args.max_iters
    if args.target_loss is not None:
        overrides["target_loss"] = args.target_loss
    if args.tol is not None:
        overrides["convergence_tol"] = args.tol
    overrides["param_space"] = args.space
    return jsonio.fit_config_from_json(overrides)


def cmd_fit(args) -> int:
    try:
        if args.scene:
            scene = jsonio.scene_from_json(_load_json_arg(args.scene))
            camera, corners, target = scene.camera, scene.corners, scene.observed
        else:
            if not (args.camera and args.points and (args.corners or args.dims)):
                print("fit: need --scene, or --camera + --points + "
                      "(--corners | --dims)", file=sys.stderr)
                return 2
            camera = jsonio.camera_from_json(_load_json_arg(args.camera))
            target = jsonio.points_from_json(_load_json_arg(args.points), 2)
            corners = jsonio.points_from_json(_load_json_arg(args.corners), 3) \
                if args.corners else box_corners(*_parse_dims(args.dims))
            scene = None
        if args.init == "auto":
            init = initial_pose_estimate(camera, corners, target)
        else:
            init = jsonio.pose_from_json(_load_json_arg(args.init))
        cfg = _fit_config_from_args(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"fit: {exc}", file=sys.stderr)
        return 2

    try:
        if args.space == "region_channels":
            if scene is not None and scene.grid is not None:
                grid = scene.grid.config
                cell = select_best_cell(iter_cells(grid, scene.grid.flat))
            else:
                if not args.grid:
                    print("fit: region space needs --grid or a scene with "
                          "an encoded grid", file=sys.stderr)
                    return 2
                grid = jsonio.grid_config_from_json(_load_json_arg(args.grid))
                enc = encode_translation(grid, camera, init.translation_array())
                cell = RegionCellOutput(
                    cell_col=enc.cell_col, cell_row=enc.cell_row, anchor=0,
                    box2d=(0.0, 0.0, 0.0, 0.0), tu=enc.tu, tv=enc.tv,
                    tw=enc.tw, abc=init.rotation, conf=0.0,
                    class_scores=(0.0,) * grid.num_classes)
            result = fit_region_channels(grid, camera, corners, target, cell,
                                         cfg)
            report = result.report
        else:
            report = fit_pose(camera, corners, target, init, cfg)
    except Pose6dError as exc:
        print(f"fit: {exc}", file=sys.stderr)
        return 3

    _emit(jsonio.fit_report_to_json(report), args.out)
    return 0 if report.converged and report.failure is None else 3


def cmd_gen(args) -> int:
    try:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        grid_cfg = jsonio.grid_config_from_json(_load_json_arg(args.grid)) \
            if args.grid else None
        dims_meta = {}
        for i in range(args.count):
            scene = generate_scene(
                seed=args.seed + i,
                depth_range=(args.depth[0], args.depth[1]),
                extent_range=(args.extent[0], args.extent[1]),
                max_angle_deg=args.max_angle,
                noise_sigma=args.noise,
                grid_config=grid_cfg)
            stem = f"{i:04d}"
            (out_dir / f"{stem}.scene.json").write_text(
                jsonio.dumps(jsonio.scene_to_json(scene)) + "\n",
                encoding="utf-8")
            save_ground_truth(
                out_dir / f"{stem}.rot", out_dir / f"{stem}.tra",
                abc_to_rotation(scene.pose.rotation),
                scene.pose.translation_array() * 100.0)
            dims_meta[stem] = jsonio.dims_to_json(scene.dims)
        if args.count > 0:
            meta = {"camera": jsonio.camera_to_json(LINEMOD_CAMERA),
                    "dims": dims_meta}
            (out_dir / "meta.json").write_text(jsonio.dumps(meta) + "\n",
                                               encoding="utf-8")
    except (OSError, ValueError) as exc:
        print(f"gen: {exc}", file=sys.stderr)
        return 2
    return 0


def _pose_stems(directory: Path) -> set[str]:
    return {p.name[:-4] for p in directory.glob("*.rot")} \
        & {p.name[:-4] for p in directory.glob("*.tra")}


def cmd_eval(args) -> int:
    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    try:
        meta = json.loads((gt_dir / "meta.json").read_text(encoding="utf-8"))
        camera = jsonio.camera_from_json(meta["camera"])
        dims_by_stem = meta["dims"]
    except (OSError, ValueError, KeyError) as exc:
        print(f"eval: cannot read ground-truth meta: {exc}", file=sys.stderr)
        return 2

    pred_stems, gt_stems = _pose_stems(pred_dir), _pose_stems(gt_dir)
    matched = sorted(pred_stems & gt_stems)
    unmatched = sorted(pred_stems ^ gt_stems)
    if unmatched or not matched:
        for stem in unmatched:
            print(f"eval: unmatched stem {stem}", file=sys.stderr)
        if not matched:
            print("eval: no matched prediction/ground-truth pairs",
                  file=sys.stderr)
        return 4

    rows = []
    try:
        for stem in matched:
            gt = load_ground_truth(gt_dir / f"{stem}.rot",
                                   gt_dir / f"{stem}.tra").pose()
            pred = load_ground_truth(pred_dir / f"{stem}.rot",
                                     pred_dir / f"{stem}.tra").pose()
            corners = box_corners(*jsonio.dims_from_json(dims_by_stem[stem]))
            rows.append((stem, [evaluate(camera, pred, gt, corners,
                                         threshold=args.threshold)]))
    except (Pose6dError, KeyError, ValueError) as exc:
        print(f"eval: {exc}", file=sys.stderr)
        return 2

    csv_text = accuracy_table_csv(rows)
    if args.csv:
        Path(args.csv).write_text(csv_text, encoding="utf-8")
    else:
        print(csv_text, end="")

    reports = [r for _, group in rows for r in group]
    summary = {
        "count": len(reports),
        "accuracy": accuracy_over_set(reports),
        "mean_pixel_error": float(np.mean([r.mean_pixel_error for r in reports])),
        "mean_e_te_cm": float(np.mean([r.e_te for r in reports])),
        "mean_e_re_deg": float(np.mean([r.e_re for r in reports])),
        "threshold": args.threshold,
    }
    if args.summary:
        Path(args.summary).write_text(jsonio.dumps(summary) + "\n",
                                      encoding="utf-8")
    else:
        print(jsonio.dumps(summary))
    return 0


def cmd_solve_annotation(args) -> int:
    try:
        camera = jsonio.camera_from_json(_load_json_arg(args.camera))
        ann, box, dims = jsonio.annotation_from_json(
            _load_json_arg(args.annotation))
        init = jsonio.abc_from_json(_load_json_arg(args.init)) if args.init \
            else jsonio.abc_from_json({"a": 0.0, "b": 0.0, "c": 0.0})
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"solve-annotation: {exc}", file=sys.stderr)
        return 2

    try:
        rot = solve_rotation_from_axes(camera, ann, init)
        R = abc_to_rotation(rot.rotation)
        tra = assign_tangent_corners(camera, R, dims, box,
                                     translation_init_from_box(camera, dims,
                                                               box))
    except Pose6dError as exc:
        print(f"solve-annotation: {exc}", file=sys.stderr)
        return 3

    from .projection import Pose
    _emit({
        "pose": jsonio.pose_to_json(Pose(rot.rotation, tra.translation)),
        "rotation_matrix": jsonio.rotation_to_json(R),
        "rotation_residual": rot.residual,
        "rotation_converged": rot.converged,
        "translation_iterations": tra.iterations,
        "translation_converged": tra.converged,
        "tangency": jsonio.tangency_to_json(tra.tangency),
    }, args.out)
    return 0 if rot.converged and tra.converged else 3


def cmd_bench(args) -> int:
    grid = GridDecodeConfig(image_width=640, image_height=480,
                            grid_cols=13, grid_rows=13, num_classes=13)
    scene = generate_scene(seed=7, grid_config=grid)
    cell = read_cell(grid, scene.grid.flat, scene.grid.cell_row,
                     scene.grid.cell_col, scene.grid.anchor)

    decode_times = []
    for _ in range(args.trials):
        t0 = time.perf_counter_ns()
        pose = decode_pose(grid, scene.camera, cell)
        project(scene.camera, pose, scene.corners)
        decode_times.append((time.perf_counter_ns() - t0) / 1e3)

    rng = np.random.default_rng(11)
    fit_times = []
    for _ in range(args.trials):
        from .evalkit import perturbed_pose
        init = perturbed_pose(scene.pose, rng, 8.0, 0.08)
        t0 = time.perf_counter_ns()
        fit_pose(scene.camera, scene.corners, scene.pts, init,
                 FitConfig(target_loss=1e-16))
        fit_times.append((time.perf_counter_ns() - t0) / 1e6)

    decode_median = statistics.median(decode_times)
    fit_median = statistics.median(fit_times)
    report = {
        "trials": args.trials,
        "decode_project": {
            "median_us": decode_median,
            "budget_us": DECODE_PROJECT_BUDGET_US,
            "within_budget": decode_median < DECODE_PROJECT_BUDGET_US,
            "within_10x_budget": decode_median < 10 * DECODE_PROJECT_BUDGET_US,
        },
        "fit": {
            "median_ms": fit_median,
            "budget_ms": FIT_BUDGET_MS,
            "within_budget": fit_median < FIT_BUDGET_MS,
            "within_10x_budget": fit_median < 10 * FIT_BUDGET_MS,
        },
    }
    _emit(report, args.out)
    return 0


def resolve_port(explicit: int | None) -> int:
    """CLI flag wins; otherwise the POSE6D_PORT env var; otherwise 8000."""
    if explicit is not None:
        return explicit
    return int(os.environ.get(DEFAULT_PORT_ENV, "8000"))


def grid_defaults_from_config(path_or_json: str | None) -> GridDecodeConfig | None:
    """Optional service config file: {"grid": {...grid fields...}}."""
    if not path_or_json:
        return None
    cfg = _load_json_arg(path_or_json)
    if "grid" not in cfg:
        return None
    return jsonio.grid_config_from_json(cfg["grid"])


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    try:
        grid = grid_defaults_from_config(args.config)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"serve: {exc}", file=sys.stderr)
        return 2
    uvicorn.run(create_app(grid), host=args.bind, port=resolve_port(args.port))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pose6d",
        description="PnP-free 6D pose toolkit: fit, evaluate, annotate, serve.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a pose to observed corner projections")
    p.add_argument("--scene", help="scene JSON (path or inline)")
    p.add_argument("--camera", help="camera intrinsics JSON")
    p.add_argument("--points", help="observed 2D points JSON")
    p.add_argument("--corners", help="3D model corners JSON")
    p.add_argument("--dims", help="box dims as LxWxH (meters)")
    p.add_argument("--init", default="auto",
                   help="initial pose JSON, or 'auto' for the cold-start "
                        "heuristic")
    p.add_argument("--space", choices=["direct_pose", "region_channels"],
                   default="direct_pose")
    p.add_argument("--grid", help="grid config JSON for region space")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--target-loss", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", help="write the fit report to this file")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("gen", help="generate synthetic scenes + ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--depth", type=float, nargs=2, default=[0.6, 1.2])
    p.add_argument("--extent", type=float, nargs=2, default=[0.1, 0.3])
    p.add_argument("--max-angle", type=float, default=170.0)
    p.add_argument("--grid", help="grid config JSON to embed encoded grids")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--csv", help="write the accuracy table here")
    p.add_argument("--summary", help="write the summary JSON here")
    p.add_argument("--threshold", type=float, default=5.0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("solve-annotation",
                       help="solve a pose from a drawn-axes annotation")
    p.add_argument("--camera", required=True)
    p.add_argument("--annotation", required=True)
    p.add_argument("--init", help="initial rotation JSON {a, b, c}")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve_annotation)

    p = sub.add_parser("bench", help="measure decode/project and fit budgets")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=None,
                   help=f"default: ${DEFAULT_PORT_ENV} or 8000")
    p.add_argument("--bind", default="127.0.0.1")
    p.add_argument("--config", help="JSON config with grid defaults")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
