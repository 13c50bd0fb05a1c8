import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dualtilt.dynamics import PlatformParams, PlatformState, check_chart, dynamics, \
    dynamics_vector, euler_rate_matrix, euler_rate_matrix_dot, rotation_wb
from dualtilt.errors import KinematicSingularity
from dualtilt.simulation import rk4_step

angles = st.floats(-np.pi, np.pi)
pitches = st.floats(-np.pi / 2 + 0.1, np.pi / 2 - 0.1)
rates = st.floats(-3.0, 3.0)
PARAMS = PlatformParams()


def test_rotation_examples():
    np.testing.assert_array_equal(rotation_wb([0, 0, 0]), np.eye(3))
    np.testing.assert_allclose(rotation_wb([0, 0, np.pi / 2]) @ [1, 0, 0], [0, 1, 0], atol=1e-15)


@given(angles, pitches, angles)
def test_rotation_orthonormal(roll, pitch, yaw):
    R = rotation_wb([roll, pitch, yaw])
    np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-12)
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


def test_rate_matrix_examples():
    np.testing.assert_array_equal(euler_rate_matrix([0, 0, 0]), np.eye(3))
    assert abs(np.linalg.det(euler_rate_matrix([0.3, np.pi / 2, 0.0]))) < 1e-15


@given(angles, pitches, angles)
def test_rate_matrix_determinant(roll, pitch, yaw):
    assert np.linalg.det(euler_rate_matrix([roll, pitch, yaw])) == pytest.approx(np.cos(pitch),
                                                                                abs=1e-12)


def test_rate_matrix_dot_examples():
    np.testing.assert_array_equal(euler_rate_matrix_dot([0.2, 0.1, 0.3], [0, 0, 0]), 0)
    assert euler_rate_matrix_dot([0, 0, 0], [0, 1, 0])[0, 2] == -1.0


@given(angles, pitches, angles, rates, rates, rates)
def test_rate_matrix_dot_finite_difference(r, p, y, dr, dp, dy):
    delta, ddelta = np.array([r, p, y]), np.array([dr, dp, dy])
    h = 1e-6
    fd = (euler_rate_matrix(delta + h * ddelta) - euler_rate_matrix(delta - h * ddelta)) / (2 * h)
    np.testing.assert_allclose(euler_rate_matrix_dot(delta, ddelta), fd, atol=1e-8)


def test_body_rates_match_rotation_derivative():
    # R' = R [omega]x with omega = W(delta) delta'
    delta, ddelta = np.array([0.3, -0.4, 1.1]), np.array([0.5, -0.2, 0.7])
    h = 1e-6
    dR = (rotation_wb(delta + h * ddelta) - rotation_wb(delta - h * ddelta)) / (2 * h)
    skew = rotation_wb(delta).T @ dR
    omega = np.array([skew[2, 1], skew[0, 2], skew[1, 0]])
    np.testing.assert_allclose(omega, euler_rate_matrix(delta) @ ddelta, atol=1e-8)


def test_hover_equilibrium():
    s = PlatformState.at_rest((2.0, 0.0, 0.0))
    _, acc, _, ddelta = dynamics(s, [0, 0, 19.62, 0, 0, 0], PARAMS)
    np.testing.assert_allclose(acc, 0.0, atol=1e-14)
    np.testing.assert_array_equal(ddelta, 0.0)


def test_zero_wrench_free_fall():
    _, acc, _, _ = dynamics(PlatformState.at_rest(), np.zeros(6), PARAMS)
    np.testing.assert_array_equal(acc, [0, 0, -9.81])


def test_pure_yaw_torque():
    _, _, _, ddelta = dynamics(PlatformState.at_rest(), [0, 0, 0, 0, 0, 0.04], PARAMS)
    np.testing.assert_allclose(ddelta, [0, 0, 1.0], atol=1e-15)


@given(angles, pitches, angles, rates, rates, rates, st.floats(-0.1, 0.1))
def test_chart_consistent_with_body_rates(r, p, y, dr, dp, dy, tz):
    s = np.zeros(12)
    s[6:9], s[9:12] = [r, p, y], [dr, dp, dy]
    torque = np.array([0.02, -0.01, tz])
    ddelta = dynamics_vector(s, np.concatenate([[0, 0, 19.62], torque]), PARAMS)[9:12]
    W = euler_rate_matrix(s[6:9])
    omega = W @ s[9:12]
    J = PARAMS.inertia
    omega_dot = np.linalg.solve(J, torque - np.cross(omega, J @ omega))
    lhs = euler_rate_matrix_dot(s[6:9], s[9:12]) @ s[9:12] + W @ ddelta
    np.testing.assert_allclose(lhs, omega_dot, atol=1e-9)


def test_free_fall_parabola():
    s0 = np.zeros(12)
    s0[3:6] = [1.0, -0.5, 2.0]
    f = lambda s: dynamics_vector(s, np.zeros(6), PARAMS)
    s, h, n = s0.copy(), 1e-2, 200
    for _ in range(n):
        s = rk4_step(f, s, h)
    t = n * h
    np.testing.assert_allclose(s[3:6], [1.0, -0.5, 2.0 - 9.81 * t], atol=1e-12)
    np.testing.assert_allclose(s[:3], [t, -0.5 * t, 2.0 * t - 0.5 * 9.81 * t * t], atol=1e-11)


def test_singularity_detected():
    with pytest.raises(KinematicSingularity):
        check_chart([0.0, np.pi / 2, 0.0])
    s = np.zeros(12)
    s[7] = np.pi / 2
    with pytest.raises(KinematicSingularity):
        dynamics_vector(s, np.zeros(6), PARAMS)


def test_params_validation():
    with pytest.raises(ValueError):
        PlatformParams(mass=0.0)
    with pytest.raises(ValueError):
        PlatformParams(inertia=np.diag([1.0, -1.0, 1.0]))


def test_state_vector_round_trip():
    s = np.arange(12.0)
    np.testing.assert_array_equal(PlatformState.from_vector(s).to_vector(), s)
