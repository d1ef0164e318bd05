import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pose6d import (AbcRotation, SingularRotation, abc_to_rotation,
                    is_rotation_matrix, nearest_rotation,
                    orthonormality_error, rotation_angle_between,
                    rotation_jacobian, rotation_to_abc)

from conftest import central_difference

finite_abc = st.floats(min_value=-10.0, max_value=10.0,
                       allow_nan=False, allow_infinity=False)


def rot_x_90():
    return np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])


class TestAbcToRotation:
    def test_zero_vector_is_identity(self):
        assert np.array_equal(abc_to_rotation(AbcRotation(0, 0, 0)), np.eye(3))

    def test_unit_a_is_quarter_turn_about_x(self):
        # hand evaluation: denominator 2, numerator diag(2, 0, 0) plus
        # off-diagonal -2/+2 in the yz block
        np.testing.assert_allclose(abc_to_rotation(AbcRotation(1, 0, 0)),
                                   rot_x_90(), atol=1e-15)

    def test_unit_c_is_quarter_turn_about_z(self):
        expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        np.testing.assert_allclose(abc_to_rotation(AbcRotation(0, 0, 1)),
                                   expected, atol=1e-15)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            AbcRotation(float("nan"), 0, 0)
        with pytest.raises(ValueError):
            AbcRotation(0, float("inf"), 0)

    @settings(max_examples=200, deadline=None)
    @given(finite_abc, finite_abc, finite_abc)
    def test_always_orthonormal_with_unit_determinant(self, a, b, c):
        R = abc_to_rotation(AbcRotation(a, b, c))
        assert orthonormality_error(R) < 1e-12
        assert abs(np.linalg.det(R) - 1.0) < 1e-12

    def test_angle_matches_gibbs_magnitude(self):
        r = AbcRotation(0.3, -0.4, 0.5)
        R = abc_to_rotation(r)
        expected = math.degrees(2.0 * math.atan(r.norm()))
        assert rotation_angle_between(R, np.eye(3)) == pytest.approx(expected,
                                                                     abs=1e-10)


class TestRotationToAbc:
    def test_identity_maps_to_zero(self):
        r = rotation_to_abc(np.eye(3))
        assert (r.a, r.b, r.c) == (0.0, 0.0, 0.0)

    def test_inverts_quarter_turn(self):
        r = rotation_to_abc(rot_x_90())
        assert (r.a, r.b, r.c) == (1.0, 0.0, 0.0)

    def test_half_turn_is_singular(self):
        Rz_pi = np.diag([-1.0, -1.0, 1.0])
        with pytest.raises(SingularRotation):
            rotation_to_abc(Rz_pi)

    def test_round_trip_under_175_degrees(self):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(10_000):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            angle = rng.uniform(0.0, math.radians(175.0))
            abc = AbcRotation.from_array(math.tan(angle / 2.0) * axis)
            R = abc_to_rotation(abc)
            R2 = abc_to_rotation(rotation_to_abc(R))
            worst = max(worst, float(np.abs(R2 - R).max()))
        assert worst < 1e-9


class TestRotationJacobian:
    def test_partials_at_origin(self):
        # symbolic differentiation of the rational formula at (0, 0, 0)
        dR = rotation_jacobian(AbcRotation(0, 0, 0))
        np.testing.assert_allclose(
            dR[0], [[0, 0, 0], [0, 0, -2], [0, 2, 0]], atol=1e-15)
        np.testing.assert_allclose(
            dR[2], [[0, -2, 0], [2, 0, 0], [0, 0, 0]], atol=1e-15)

    def test_matches_central_differences(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            abc = rng.uniform(-1.0, 1.0, size=3)
            abc *= rng.uniform(0.0, 10.0) / max(np.linalg.norm(abc), 1e-9)
            analytic = rotation_jacobian(AbcRotation.from_array(abc))
            fd = central_difference(
                lambda x: abc_to_rotation(AbcRotation.from_array(x)), abc)
            fd = np.moveaxis(fd, -1, 0)
            scale = np.maximum(np.abs(analytic), 1.0)
            assert np.max(np.abs(fd - analytic) / scale) < 1e-5


class TestAngleBetween:
    def test_identical_rotations(self):
        R = abc_to_rotation(AbcRotation(0.2, 0.1, -0.3))
        assert rotation_angle_between(R, R) == 0.0

    def test_quarter_turn(self):
        assert rotation_angle_between(np.eye(3), rot_x_90()) == pytest.approx(90.0)

    def test_constructed_half_degree(self):
        R = abc_to_rotation(AbcRotation(0.4, -0.2, 0.9))
        delta = AbcRotation(math.tan(math.radians(0.5) / 2.0), 0.0, 0.0)
        Rb = R @ abc_to_rotation(delta)
        assert rotation_angle_between(R, Rb) == pytest.approx(0.5, abs=1e-9)

    def test_symmetric_and_triangle_sane(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            Ra, Rb, Rc = (abc_to_rotation(AbcRotation.from_array(
                rng.uniform(-2, 2, size=3))) for _ in range(3))
            ab = rotation_angle_between(Ra, Rb)
            assert ab == pytest.approx(rotation_angle_between(Rb, Ra), abs=1e-12)
            assert rotation_angle_between(Ra, Rc) <= \
                ab + rotation_angle_between(Rb, Rc) + 1e-9


class TestHelpers:
    def test_is_rotation_matrix(self):
        assert is_rotation_matrix(np.eye(3))
        assert not is_rotation_matrix(np.diag([1.0, 1.0, -1.0]))
        assert not is_rotation_matrix(np.eye(3) * 1.001)

    def test_nearest_rotation_projects_back(self):
        rng = np.random.default_rng(5)
        R = abc_to_rotation(AbcRotation(0.5, -0.2, 0.8))
        noisy = R + rng.normal(0.0, 1e-5, size=(3, 3))
        fixed = nearest_rotation(noisy)
        assert orthonormality_error(fixed) < 1e-12
        assert rotation_angle_between(fixed, R) < 0.01
