"""Newton-Euler rigid-body dynamics in Euler-angle coordinates.

Attitude is parameterized by delta = (roll, pitch, yaw) with the ZYX
composition R_WB = R_z(yaw) R_y(pitch) R_x(roll), the convention under which
body rates are omega_B = W(delta) @ delta_dot with W as in ``euler_rate_matrix``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import KinematicSingularity

GRAVITY = 9.81
SINGULARITY_TOL = 1e-6

# Platform state vector layout: position, velocity, euler angles, euler rates.
POS = slice(0, 3)
VEL = slice(3, 6)
ATT = slice(6, 9)
RATE = slice(9, 12)
PLATFORM_STATE_NAMES = (
    "x", "y", "z", "vx", "vy", "vz",
    "roll", "pitch", "yaw", "roll_rate", "pitch_rate", "yaw_rate",
)


@dataclass(frozen=True)
class PlatformParams:
    mass: float = 2.0
    inertia: np.ndarray = field(default_factory=lambda: np.diag([0.0217, 0.0217, 0.04]))
    gravity: float = GRAVITY

    def __post_init__(self):
        inertia = np.array(self.inertia, dtype=float)
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if inertia.shape != (3, 3) or not np.allclose(inertia, inertia.T):
            raise ValueError("inertia must be a symmetric 3x3 matrix")
        if np.any(np.linalg.eigvalsh(inertia) <= 0):
            raise ValueError("inertia must be positive definite")
        inertia.flags.writeable = False
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "_inertia_inv", np.linalg.inv(inertia))

    @property
    def inertia_inv(self):
        return self._inertia_inv


@dataclass
class PlatformState:
    position: np.ndarray
    velocity: np.ndarray
    attitude: np.ndarray
    attitude_rate: np.ndarray

    @classmethod
    def at_rest(cls, position=(0.0, 0.0, 0.0), attitude=(0.0, 0.0, 0.0)):
        return cls(np.array(position, float), np.zeros(3), np.array(attitude, float), np.zeros(3))

    @classmethod
    def from_vector(cls, s):
        s = np.asarray(s, dtype=float)
        return cls(s[POS].copy(), s[VEL].copy(), s[ATT].copy(), s[RATE].copy())

    def to_vector(self):
        return np.concatenate([self.position, self.velocity, self.attitude, self.attitude_rate])


def rotation_wb(delta):
    roll, pitch, yaw = delta
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    return np.array([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ])


def euler_rate_matrix(delta):
    roll, pitch, _ = delta
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    return np.array([
        [1.0, 0.0, -sp],
        [0.0, cr, cp * sr],
        [0.0, -sr, cp * cr],
    ])


def euler_rate_matrix_dot(delta, delta_dot):
    roll, pitch, _ = delta
    droll, dpitch, _ = delta_dot
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    return np.array([
        [0.0, 0.0, -cp * dpitch],
        [0.0, -sr * droll, -sp * sr * dpitch + cp * cr * droll],
        [0.0, -cr * droll, -sp * cr * dpitch - cp * sr * droll],
    ])


def check_chart(delta):
    if abs(np.cos(delta[1])) < SINGULARITY_TOL:
        raise KinematicSingularity(f"pitch {delta[1]:.6f} rad is at the Euler-angle singularity")


def dynamics_vector(s, wrench, params):
    """Time derivative of the 12-vector platform state under a body wrench."""
    delta, delta_dot = s[ATT], s[RATE]
    check_chart(delta)
    force, torque = wrench[:3], wrench[3:]
    J = params.inertia

    acc = rotation_wb(delta) @ force / params.mass
    acc[2] -= params.gravity

    W = euler_rate_matrix(delta)
    omega = W @ delta_dot
    omega_dot = params.inertia_inv @ (torque - np.cross(omega, J @ omega))
    delta_ddot = np.linalg.solve(W, omega_dot - euler_rate_matrix_dot(delta, delta_dot) @ delta_dot)

    return np.concatenate([s[VEL], acc, delta_dot, delta_ddot])


def dynamics(state, wrench, params):
    """Derivative of a PlatformState, returned as (p_dot, p_ddot, delta_dot, delta_ddot)."""
    ds = dynamics_vector(state.to_vector(), np.asarray(wrench, float), params)
    return ds[POS], ds[VEL], ds[ATT], ds[RATE]
