"""High-level wrench controller for trajectory tracking.

The commanded wrench is built so that, with ideal actuation, each
position and attitude error channel obeys e'' + K_D e' + K_P e = 0.
"""

from dataclasses import dataclass, field

import numpy as np

from .dynamics import ATT, POS, RATE, VEL, check_chart, euler_rate_matrix, \
    euler_rate_matrix_dot, rotation_wb

E3 = np.array([0.0, 0.0, 1.0])


def _cross(a, b):
    # np.cross carries ~30 us of overhead for 3-vectors; this sits in the sim loop
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


def _diag(values):
    return np.diag(np.asarray(values, dtype=float))


@dataclass(frozen=True)
class ControllerGains:
    kp: np.ndarray = field(default_factory=lambda: _diag([2.0] * 3))
    kd: np.ndarray = field(default_factory=lambda: _diag([1.5] * 3))
    kp_att: np.ndarray = field(default_factory=lambda: _diag([2.0] * 3))
    kd_att: np.ndarray = field(default_factory=lambda: _diag([1.5] * 3))

    def __post_init__(self):
        for name in ("kp", "kd", "kp_att", "kd_att"):
            gain = np.asarray(getattr(self, name), dtype=float)
            if gain.ndim == 1:
                gain = np.diag(gain)
            if gain.shape != (3, 3) or np.any(gain != np.diag(np.diag(gain))):
                raise ValueError(f"{name} must be a diagonal 3x3 matrix")
            if np.any(np.diag(gain) <= 0):
                raise ValueError(f"{name} must be positive definite")
            object.__setattr__(self, name, gain)


def tracking_errors(state, ref):
    """Return (e_p, e_p_dot, e_delta, e_delta_dot) as desired minus actual.

    ``state`` is either a PlatformState or the 12-vector form.
    """
    s = state if isinstance(state, np.ndarray) else state.to_vector()
    return (
        ref.position - s[POS],
        ref.velocity - s[VEL],
        ref.attitude - s[ATT],
        ref.attitude_rate - s[RATE],
    )


def wrench_command(state, ref, gains, platform):
    """Commanded body wrench u_v* = (f_c, tau_c) as a 6-vector."""
    s = state if isinstance(state, np.ndarray) else state.to_vector()
    delta, delta_dot = s[ATT], s[RATE]
    check_chart(delta)
    e_p, de_p, e_d, de_d = tracking_errors(s, ref)
    J = platform.inertia

    acc_cmd = ref.acceleration + gains.kd @ de_p + gains.kp @ e_p + platform.gravity * E3
    force = platform.mass * rotation_wb(delta).T @ acc_cmd

    W = euler_rate_matrix(delta)
    omega = W @ delta_dot
    torque = (
        J @ W @ (ref.attitude_acc + gains.kd_att @ de_d + gains.kp_att @ e_d)
        + J @ euler_rate_matrix_dot(delta, delta_dot) @ delta_dot
        + _cross(omega, J @ omega)
    )
    return np.concatenate([force, torque])


class CommandDifferentiator:
    """Causal backward-difference estimate of the command rate.

    The first sample after construction (or ``reset``) returns zero.
    """

    def __init__(self):
        self._previous = None

    def reset(self):
        self._previous = None

    def update(self, command, dt):
        command = np.array(command, dtype=float)
        if self._previous is None:
            rate = np.zeros_like(command)
        else:
            rate = (command - self._previous) / dt
        self._previous = command
        return rate


def wrench_command_derivative(history, dt):
    """Backward-difference rates for a sequence of commands sampled every ``dt``."""
    diff = CommandDifferentiator()
    return np.array([diff.update(u, dt) for u in history])
