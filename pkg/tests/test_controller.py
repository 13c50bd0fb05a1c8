import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualtilt.controller import CommandDifferentiator, ControllerGains, tracking_errors, \
    wrench_command, wrench_command_derivative
from dualtilt.dynamics import PlatformParams, PlatformState, dynamics_vector
from dualtilt.trajectory import CircleTrajectory, HoverReference

PARAMS = PlatformParams()
GAINS = ControllerGains()


def test_errors_on_reference_are_zero():
    ref = CircleTrajectory().sample(1.3)
    s = PlatformState(ref.position, ref.velocity, ref.attitude, ref.attitude_rate)
    for e in tracking_errors(s, ref):
        np.testing.assert_array_equal(e, 0.0)


def test_error_sign():
    ref = HoverReference().sample(0.0)
    e_p, *_ = tracking_errors(PlatformState.at_rest((1.0, 0.0, 0.0)), ref)
    np.testing.assert_array_equal(e_p, [-1, 0, 0])


def test_hover_command():
    u = wrench_command(PlatformState.at_rest(), HoverReference().sample(0.0), GAINS, PARAMS)
    np.testing.assert_allclose(u, [0, 0, 19.62, 0, 0, 0], atol=1e-14)


def test_position_error_command():
    u = wrench_command(PlatformState.at_rest((-1.0, 0, 0)), HoverReference().sample(0.0),
                       GAINS, PARAMS)
    np.testing.assert_allclose(u[:3], [4, 0, 19.62], atol=1e-14)


def test_yaw_rate_error_torque():
    s = PlatformState.at_rest()
    s.attitude_rate = np.array([0.0, 0.0, 0.8])
    u = wrench_command(s, HoverReference().sample(0.0), GAINS, PARAMS)
    assert u[5] == pytest.approx(0.04 * 1.5 * -0.8, abs=1e-15)


def test_gains_validation():
    with pytest.raises(ValueError):
        ControllerGains(kp=np.ones((3, 3)))
    with pytest.raises(ValueError):
        ControllerGains(kd=[1.0, 0.0, 1.0])


def test_differentiator_constant_and_ramp():
    d = CommandDifferentiator()
    assert np.all(d.update(np.ones(6), 1e-3) == 0)
    assert np.all(d.update(np.ones(6), 1e-3) == 0)
    t = 1e-3 * np.arange(50)
    rates = wrench_command_derivative([2.5 * tk * np.ones(6) - 1.0 for tk in t], 1e-3)
    np.testing.assert_array_equal(rates[0], 0.0)
    np.testing.assert_allclose(rates[1:], 2.5, atol=1e-12)


def test_differentiator_sinusoid():
    dt, amp = 1e-3, 3.0
    t = dt * np.arange(2, 8000)
    u = [amp * np.cos(0.8 * tk) * np.ones(6) for tk in t]
    rates = wrench_command_derivative(u, dt)[1:, 0]
    exact = -amp * 0.8 * np.sin(0.8 * t[1:])
    assert np.max(np.abs(rates - exact)) < 1e-3 * amp


vec = st.floats(-1.0, 1.0)


@settings(max_examples=15)
@given(st.floats(-np.pi, np.pi), vec, vec, vec)
def test_command_equivariant_under_world_yaw(phi, x, y, yaw):
    tr = CircleTrajectory()
    ref = tr.sample(1.1)
    c, s = np.cos(phi), np.sin(phi)
    Rz = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    state = PlatformState(np.array([x, y, 0.3]), np.array([0.2, -0.1, 0.05]),
                          np.array([0.1, -0.05, yaw]), np.array([0.02, 0.3, -0.2]))
    rot_state = PlatformState(Rz @ state.position, Rz @ state.velocity,
                              state.attitude + [0, 0, phi], state.attitude_rate)
    rot_ref = type(ref)(ref.t, Rz @ ref.position, Rz @ ref.velocity, Rz @ ref.acceleration,
                        ref.attitude + [0, 0, phi], ref.attitude_rate, ref.attitude_acc)
    np.testing.assert_allclose(wrench_command(rot_state, rot_ref, GAINS, PARAMS),
                               wrench_command(state, ref, GAINS, PARAMS), atol=1e-12)


def closed_loop_errors(s0, tr, t_end, h=0.01):
    """Ideal actuation: the platform receives exactly the commanded wrench."""
    def f(s, t):
        return dynamics_vector(s, wrench_command(s, tr.sample(t), GAINS, PARAMS), PARAMS)

    s = s0.copy()
    n = int(round(t_end / h))
    for k in range(n):
        s = _rk4_t(f, s, k * h, h)
    ref = tr.sample(n * h)
    return np.linalg.norm(ref.position - s[:3]), np.linalg.norm(ref.attitude - s[6:9])


def _rk4_t(f, s, t, h):
    # time-dependent RK4: the reference is sampled at the stage times
    k1 = f(s, t)
    k2 = f(s + 0.5 * h * k1, t + 0.5 * h)
    k3 = f(s + 0.5 * h * k2, t + 0.5 * h)
    k4 = f(s + h * k3, t + h)
    return s + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


@settings(max_examples=6)
@given(st.integers(0, 2**32 - 1))
def test_closed_loop_error_decay(seed):
    rng = np.random.default_rng(seed)
    tr = CircleTrajectory()
    ref = tr.sample(0.0)
    dp = rng.normal(size=3)
    dp *= rng.uniform(0, 1) / np.linalg.norm(dp)
    dd = rng.normal(size=3)
    dd *= rng.uniform(0, 0.3) / np.linalg.norm(dd)
    s0 = np.concatenate([ref.position + dp, ref.velocity, ref.attitude + dd, np.zeros(3)])
    lam_min = 0.75      # slowest pole real part of s^2 + 1.5 s + 2
    e_p, e_d = closed_loop_errors(s0, tr, 10.0 / lam_min)
    assert e_p < 1e-4 and e_d < 1e-4
