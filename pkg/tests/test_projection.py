import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pose6d import (AbcRotation, BOX_EDGES, DegenerateDepth, LengthMismatch,
                    Pose, box_corners, loss_gradient, project,
                    projection_jacobian, reprojection_loss)
from pose6d.fitting import gradient_descent_step

from conftest import central_difference, relative_error


def random_setup(rng, n=8):
    corners = rng.uniform(-0.15, 0.15, size=(n, 3))
    pose = Pose.of(AbcRotation.from_array(rng.uniform(-1.5, 1.5, size=3)),
                   [rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                    rng.uniform(0.8, 2.5)])
    return corners, pose


class TestBoxCorners:
    def test_bit_pattern_order(self):
        c = box_corners(0.2, 0.4, 0.6)
        np.testing.assert_allclose(c[0], [-0.1, -0.2, -0.3])
        np.testing.assert_allclose(c[7], [0.1, 0.2, 0.3])
        np.testing.assert_allclose(c[1], [0.1, -0.2, -0.3])   # bit 0 -> +x
        np.testing.assert_allclose(c[2], [-0.1, 0.2, -0.3])   # bit 1 -> +y
        np.testing.assert_allclose(c[4], [-0.1, -0.2, 0.3])   # bit 2 -> +z

    def test_twelve_edges_flip_one_bit(self):
        assert len(BOX_EDGES) == 12
        assert all(bin(i ^ j).count("1") == 1 for i, j in BOX_EDGES)

    def test_rejects_bad_dims(self):
        with pytest.raises(ValueError):
            box_corners(0.0, 1.0, 1.0)


class TestProject:
    def test_optical_axis_point_hits_principal_point(self, camera):
        pose = Pose.of(AbcRotation(0, 0, 0), [0, 0, 2])
        np.testing.assert_allclose(project(camera, pose, [[0, 0, 0]]),
                                   [[320.0, 240.0]])

    def test_offset_point_hand_value(self, camera):
        pose = Pose.of(AbcRotation(0, 0, 0), [0, 0, 2])
        np.testing.assert_allclose(project(camera, pose, [[0.1, 0, 0]]),
                                   [[350.0, 240.0]])

    def test_point_behind_camera_raises(self, camera):
        pose = Pose.of(AbcRotation(0, 0, 0), [0, 0, -1])
        with pytest.raises(DegenerateDepth) as err:
            project(camera, pose, [[0, 0, 0]])
        assert err.value.index == 0

    def test_doubling_depth_halves_offsets(self, camera):
        # exact perspective-division law for corners in the z = 0 plane
        corners = np.array([[0.1, 0.05, 0.0], [-0.2, 0.08, 0.0]])
        center = np.array([camera.cx, camera.cy])
        near = project(camera, Pose.of(AbcRotation(0, 0, 0), [0, 0, 0.7]), corners)
        far = project(camera, Pose.of(AbcRotation(0, 0, 0), [0, 0, 1.4]), corners)
        np.testing.assert_allclose((far - center) * 2.0, near - center,
                                   rtol=0, atol=1e-12)


class TestProjectionJacobian:
    def test_translation_block_hand_values(self, camera):
        pose = Pose.of(AbcRotation(0, 0, 0), [0, 0, 2])
        J = projection_jacobian(camera, pose, [[0, 0, 0]])[0]
        assert J[0, 3] == pytest.approx(300.0)   # du/dtx = fx / Z
        assert J[0, 5] == pytest.approx(0.0)     # du/dtz = -fx X / Z^2 = 0
        assert J[0, 4] == 0.0                    # structural zero du/dty
        assert J[1, 3] == 0.0                    # structural zero dv/dtx

    def test_structural_zeros_everywhere(self):
        rng = np.random.default_rng(21)
        from pose6d import CameraIntrinsics
        for _ in range(50):
            cam = CameraIntrinsics(*rng.uniform(300, 800, size=2),
                                   *rng.uniform(100, 400, size=2))
            corners, pose = random_setup(rng)
            J = projection_jacobian(cam, pose, corners)
            assert np.all(J[:, 0, 4] == 0.0)
            assert np.all(J[:, 1, 3] == 0.0)

    def test_matches_central_differences(self, camera):
        rng = np.random.default_rng(33)
        for _ in range(300):
            corners, pose = random_setup(rng)
            params = np.concatenate([pose.rotation.as_array(),
                                     pose.translation_array()])

            def f(p):
                return project(camera,
                               Pose.of(AbcRotation.from_array(p[:3]), p[3:]),
                               corners)

            analytic = projection_jacobian(camera, pose, corners)
            fd = central_difference(f, params)
            assert relative_error(fd, analytic) < 1e-5


class TestReprojectionLoss:
    def test_zero_iff_equal(self):
        pts = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert reprojection_loss(pts, pts) == 0.0
        assert reprojection_loss(pts, pts + 1e-9) > 0.0

    def test_three_four_five(self):
        assert reprojection_loss([[0.0, 0.0]], [[3.0, 4.0]]) == 25.0

    def test_eight_unit_offsets(self):
        pts = np.zeros((8, 2))
        shifted = pts + [1.0, 0.0]
        assert reprojection_loss(shifted, pts) == 8.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            reprojection_loss(np.zeros((3, 2)), np.zeros((4, 2)))


class TestLossGradient:
    def test_zero_at_target(self, camera):
        rng = np.random.default_rng(4)
        corners, pose = random_setup(rng)
        target = project(camera, pose, corners)
        g = loss_gradient(camera, pose, corners, target)
        assert np.linalg.norm(g) < 1e-10

    def test_matches_central_differences(self, camera):
        rng = np.random.default_rng(17)
        for _ in range(200):
            corners, pose = random_setup(rng)
            target = project(camera, pose, corners) + rng.normal(0, 2, (8, 2))
            params = np.concatenate([pose.rotation.as_array(),
                                     pose.translation_array()])

            def f(p):
                pred = project(camera,
                               Pose.of(AbcRotation.from_array(p[:3]), p[3:]),
                               corners)
                return reprojection_loss(pred, target)

            analytic = loss_gradient(camera, pose, corners, target)
            fd = central_difference(f, params)
            assert relative_error(fd, analytic) < 1e-5

    def test_rotation_block_is_jt_r(self, camera):
        # brute-force J^T r with the analogous per-corner products
        rng = np.random.default_rng(9)
        corners, pose = random_setup(rng)
        target = project(camera, pose, corners) + rng.normal(0, 1, (8, 2))
        J = projection_jacobian(camera, pose, corners)
        r = project(camera, pose, corners) - target
        oracle = 2.0 * sum(J[i].T @ r[i] for i in range(8))
        np.testing.assert_allclose(loss_gradient(camera, pose, corners, target),
                                   oracle, rtol=1e-12)

    @settings(max_examples=500, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_small_descent_step_decreases_loss(self, seed):
        from pose6d import CameraIntrinsics
        camera = CameraIntrinsics(fx=600.0, fy=600.0, cx=320.0, cy=240.0)
        rng = np.random.default_rng(seed)
        corners, pose = random_setup(rng)
        target = project(camera, pose, corners) + rng.normal(0, 3, (8, 2))
        g = loss_gradient(camera, pose, corners, target)
        loss0 = reprojection_loss(project(camera, pose, corners), target)
        if np.linalg.norm(g) == 0.0:
            return
        params = np.concatenate([pose.rotation.as_array(),
                                 pose.translation_array()])
        step = 1e-9 / max(1.0, np.linalg.norm(g))
        moved = gradient_descent_step(params, g, step)
        pose2 = Pose.of(AbcRotation.from_array(moved[:3]), moved[3:])
        loss1 = reprojection_loss(project(camera, pose2, corners), target)
        assert loss1 < loss0
