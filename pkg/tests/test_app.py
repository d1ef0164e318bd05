import json
import math

import numpy as np
import pytest
from fastapi.testclient import TestClient

from pose6d import (AbcRotation, FitConfig, abc_to_rotation, box_corners,
                    bounding_box_of, fit_pose, generate_scene, project,
                    save_ground_truth, synthetic_axis_annotation)
from pose6d import jsonio
from pose6d.cli import main
from pose6d.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def write_scene(tmp_path, seed=11, noise=0.0):
    scene = generate_scene(seed=seed, noise_sigma=noise)
    path = tmp_path / "scene.json"
    path.write_text(jsonio.dumps(jsonio.scene_to_json(scene)), encoding="utf-8")
    return scene, path


class TestCliFit:
    def test_noiseless_scene_exit_zero(self, tmp_path, capsys):
        scene, path = write_scene(tmp_path)
        code = main(["fit", "--scene", str(path), "--target-loss", "1e-16"])
        report = json.loads(capsys.readouterr().out)
        assert code == 0
        assert report["converged"]
        assert report["final_loss"] < 1e-10

    def test_malformed_json_exit_two(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        assert main(["fit", "--scene", str(bad)]) == 2

    def test_budget_exceeded_exit_three_with_report(self, tmp_path, capsys):
        scene, path = write_scene(tmp_path, seed=21, noise=4.0)
        code = main(["fit", "--scene", str(path), "--max-iters", "2"])
        report = json.loads(capsys.readouterr().out)
        assert code == 3
        assert not report["converged"]
        assert report["final_loss"] >= 0.0  # best-so-far emitted anyway

    def test_unknown_flag_rejected(self):
        with pytest.raises(SystemExit) as err:
            main(["fit", "--bogus", "x"])
        assert err.value.code == 2

    def test_delegation_equals_library(self, tmp_path, capsys):
        scene, path = write_scene(tmp_path, seed=31)
        code = main(["fit", "--scene", str(path), "--init", "auto",
                     "--target-loss", "1e-16"])
        assert code == 0
        cli_report = json.loads(capsys.readouterr().out)
        from pose6d import initial_pose_estimate
        init = initial_pose_estimate(scene.camera, scene.corners,
                                     scene.observed)
        direct = fit_pose(scene.camera, scene.corners, scene.observed, init,
                          FitConfig(target_loss=1e-16))
        assert cli_report == jsonio.fit_report_to_json(direct)


class TestCliGen:
    def test_deterministic_and_lossless(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            assert main(["gen", "--out", str(out), "--count", "2",
                         "--seed", "3", "--noise", "0.5"]) == 0
        for name in ("0000.scene.json", "0001.scene.json", "0000.rot",
                     "0000.tra", "meta.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        # scenes load back losslessly
        loaded = jsonio.scene_from_json(
            json.loads((out1 / "0000.scene.json").read_text()))
        direct = generate_scene(seed=3, noise_sigma=0.5)
        assert loaded.pose == direct.pose
        np.testing.assert_array_equal(loaded.pts, direct.pts)
        np.testing.assert_array_equal(loaded.observed, direct.observed)

    def test_count_zero_empty_dir(self, tmp_path):
        out = tmp_path / "empty"
        assert main(["gen", "--out", str(out), "--count", "0"]) == 0
        assert list(out.iterdir()) == []


class TestCliEval:
    def test_pred_equals_gt_accuracy_one(self, tmp_path, capsys):
        gt = tmp_path / "gt"
        assert main(["gen", "--out", str(gt), "--count", "3", "--seed", "7"]) == 0
        code = main(["eval", "--pred", str(gt), "--gt", str(gt)])
        out = capsys.readouterr().out
        assert code == 0
        summary = json.loads(out[out.index("{"):])
        assert summary["accuracy"] == 1.0
        # arccos conditioning bounds the angle of identical rotations
        # near 1e-7 degrees rather than exactly zero
        assert summary["mean_e_re_deg"] < 1e-5
        assert summary["mean_e_te_cm"] == 0.0

    def test_constructed_rotation_offsets(self, tmp_path, capsys):
        gt = tmp_path / "gt"
        pred = tmp_path / "pred"
        pred.mkdir()
        assert main(["gen", "--out", str(gt), "--count", "3", "--seed", "19"]) == 0
        rng = np.random.default_rng(5)
        for stem in ("0000", "0001", "0002"):
            from pose6d import load_ground_truth
            pose = load_ground_truth(gt / f"{stem}.rot", gt / f"{stem}.tra").pose()
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            delta = AbcRotation.from_array(
                math.tan(math.radians(2.43) / 2.0) * axis)
            rotated = abc_to_rotation(delta) @ abc_to_rotation(pose.rotation)
            save_ground_truth(pred / f"{stem}.rot", pred / f"{stem}.tra",
                              rotated, pose.translation_array() * 100.0)
        code = main(["eval", "--pred", str(pred), "--gt", str(gt)])
        out = capsys.readouterr().out
        assert code == 0
        for line in out.splitlines()[1:5]:
            assert float(line.split(",")[4]) == pytest.approx(2.43, abs=1e-6)

    def test_unmatched_stems_exit_four(self, tmp_path):
        gt = tmp_path / "gt"
        pred = tmp_path / "pred"
        assert main(["gen", "--out", str(gt), "--count", "2", "--seed", "1"]) == 0
        pred.mkdir()
        (pred / "0000.rot").write_bytes((gt / "0000.rot").read_bytes())
        (pred / "0000.tra").write_bytes((gt / "0000.tra").read_bytes())
        assert main(["eval", "--pred", str(pred), "--gt", str(gt)]) == 4

    def test_empty_dirs_exit_four(self, tmp_path):
        gt = tmp_path / "gt"
        pred = tmp_path / "pred"
        gt.mkdir()
        pred.mkdir()
        (gt / "meta.json").write_text('{"camera": {"fx": 572.4114, '
                                      '"fy": 573.57043, "cx": 325.2611, '
                                      '"cy": 242.04899}, "dims": {}}')
        assert main(["eval", "--pred", str(pred), "--gt", str(gt)]) == 4


class TestCliBench:
    def test_single_trial_runs(self, capsys):
        assert main(["bench", "--trials", "1"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["trials"] == 1
        assert "median_us" in report["decode_project"]


class TestCliSolveAnnotation:
    def test_round_trip(self, tmp_path, capsys):
        scene = generate_scene(seed=13, max_angle_deg=120.0)
        ann = synthetic_axis_annotation(scene.camera, scene.pose)
        box = bounding_box_of(scene.pts)
        (tmp_path / "ann.json").write_text(jsonio.dumps(
            jsonio.annotation_to_json(ann, box, scene.dims)))
        (tmp_path / "cam.json").write_text(jsonio.dumps(
            jsonio.camera_to_json(scene.camera)))
        code = main(["solve-annotation", "--camera", str(tmp_path / "cam.json"),
                     "--annotation", str(tmp_path / "ann.json")])
        out = json.loads(capsys.readouterr().out)
        assert code == 0
        solved = jsonio.pose_from_json(out["pose"])
        np.testing.assert_allclose(solved.translation, scene.pose.translation,
                                   rtol=1e-6)


class TestService:
    def test_health(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        assert resp.json()["ok"] is True

    def test_project_delegates_bit_for_bit(self, client):
        camera = {"fx": 600.0, "fy": 600.0, "cx": 320.0, "cy": 240.0}
        pose = {"rotation": {"a": 0.0, "b": 0.0, "c": 0.0},
                "translation": [0.0, 0.0, 2.0]}
        dims = {"length": 0.2, "width": 0.2, "height": 0.2}
        resp = client.post("/project", json={"camera": camera, "pose": pose,
                                             "dims": dims})
        assert resp.status_code == 200
        body = resp.json()
        direct = project(jsonio.camera_from_json(camera),
                         jsonio.pose_from_json(pose),
                         box_corners(0.2, 0.2, 0.2))
        assert body["result"]["corners"] == jsonio.points_to_json(direct)
        assert len(body["result"]["edges"]) == 12
        # identity pose centers the cube on the principal point
        mean = np.mean(body["result"]["corners"], axis=0)
        np.testing.assert_allclose(mean, [320.0, 240.0], atol=1e-9)

    def test_solve_rotation_on_exact_lines(self, client):
        scene = generate_scene(seed=23, max_angle_deg=100.0)
        ann = synthetic_axis_annotation(scene.camera, scene.pose)
        payload = {
            "camera": jsonio.camera_to_json(scene.camera),
            "axes": [{"dir": list(d), "line": jsonio.line_to_json(line)}
                     for d, line in zip(ann.axis_dirs, ann.lines)],
        }
        resp = client.post("/solve/rotation", json=payload)
        assert resp.status_code == 200
        result = resp.json()["result"]
        from pose6d import rotation_angle_between
        got = jsonio.abc_from_json(result["rotation"])
        assert rotation_angle_between(
            abc_to_rotation(got), abc_to_rotation(scene.pose.rotation)) < 0.1
        assert result["residual"] < 1e-10

    def test_solve_translation(self, client):
        scene = generate_scene(seed=29)
        box = bounding_box_of(scene.pts)
        payload = {
            "camera": jsonio.camera_to_json(scene.camera),
            "rotation": jsonio.rotation_to_json(
                abc_to_rotation(scene.pose.rotation)),
            "box": {"l": box.left, "r": box.right, "t": box.top,
                    "b": box.bottom},
            "dims": jsonio.dims_to_json(scene.dims),
        }
        resp = client.post("/solve/translation", json=payload)
        assert resp.status_code == 200
        result = resp.json()["result"]
        np.testing.assert_allclose(result["translation"],
                                   scene.pose.translation, rtol=1e-6)
        assert result["converged"]

    def test_fit_delegates_bit_for_bit(self, client):
        scene = generate_scene(seed=37)
        payload = {
            "camera": jsonio.camera_to_json(scene.camera),
            "target": jsonio.points_to_json(scene.observed),
            "corners": jsonio.points_to_json(scene.corners),
            "init": jsonio.pose_to_json(scene.pose),
            "config": {"target_loss": 1e-16},
        }
        resp = client.post("/fit", json=payload)
        assert resp.status_code == 200
        direct = fit_pose(scene.camera, scene.corners, scene.observed,
                          scene.pose, FitConfig(target_loss=1e-16))
        assert resp.json()["result"] == jsonio.fit_report_to_json(direct)

    def test_schema_violation_is_400(self, client):
        resp = client.post("/project", json={"camera": {"fx": 1.0},
                                             "bogus": True})
        assert resp.status_code == 400
        body = resp.json()
        assert body["ok"] is False
        assert body["error"]["code"] == "schema_violation"

    def test_solver_error_is_422_with_code(self, client):
        line = {"la": 0.6, "lb": 0.8, "lc": -100.0}
        payload = {
            "camera": {"fx": 600.0, "fy": 600.0, "cx": 320.0, "cy": 240.0},
            "axes": [{"dir": [1, 0, 0], "line": line},
                     {"dir": [0, 1, 0], "line": line},
                     {"dir": [0, 0, 1], "line": {"la": 0.0, "lb": 1.0,
                                                 "lc": -50.0}}],
        }
        resp = client.post("/solve/rotation", json=payload)
        assert resp.status_code == 422
        assert resp.json()["error"]["code"] == "degenerate_annotation"

    def test_oversized_request_is_413(self, client):
        resp = client.post("/fit", content=b"x" * 10,
                           headers={"content-length": "2000000",
                                    "content-type": "application/json"})
        assert resp.status_code == 413

    def test_region_fit_uses_grid_defaults(self):
        from pose6d import GridDecodeConfig
        grid = GridDecodeConfig(image_width=640, image_height=480,
                                grid_cols=13, grid_rows=13)
        app_with_grid = TestClient(create_app(grid))
        scene = generate_scene(seed=41)
        payload = {
            "camera": jsonio.camera_to_json(scene.camera),
            "target": jsonio.points_to_json(scene.pts),
            "dims": jsonio.dims_to_json(scene.dims),
            "init": jsonio.pose_to_json(scene.pose),
            "space": "region_channels",
            "config": {"target_loss": 1e-16},
        }
        resp = app_with_grid.post("/fit", json=payload)
        assert resp.status_code == 200
        result = resp.json()["result"]
        assert result["converged"]
        assert "channels" in result
        # the same request without defaults is a schema error
        resp2 = TestClient(create_app()).post("/fit", json=payload)
        assert resp2.status_code == 400

    def test_statelessness_order_invariance(self, client):
        camera = {"fx": 600.0, "fy": 600.0, "cx": 320.0, "cy": 240.0}
        requests = []
        for depth in (1.0, 1.5, 2.0):
            requests.append(("/project", {
                "camera": camera,
                "pose": {"rotation": {"a": 0.1, "b": 0.0, "c": 0.0},
                         "translation": [0.0, 0.0, depth]},
                "dims": {"length": 0.2, "width": 0.2, "height": 0.2}}))
        first = [client.post(p, json=b).json() for p, b in requests]
        second = [client.post(p, json=b).json()
                  for p, b in reversed(requests)]
        assert first == list(reversed(second))
