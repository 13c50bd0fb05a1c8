"""
Actuation model of a star-shaped dual-tilt hexarotor.

Actuator state layout (18-vector, fixed everywhere in the package)::

    x_a = [alpha_1..alpha_6, beta_1..beta_6, omega_1..omega_6]

alpha is the cant angle (rotation about the arm), beta the dihedral angle
(rotation orthogonal to the arm), omega the signed spin rate. The spin axis
of propeller i in body frame is

    z_i = R_z(gamma_i) R_y(beta_i) R_x(alpha_i) e_3

Thrust is ``c_f * omega**2`` along +z_i regardless of the spin direction;
reaction drag is ``-c_tau * omega*|omega| * z_i``, so the spin sign carries
the rotation direction. With this convention the alternating hover
configuration omega_i = +-sqrt(m g / 6 c_f) is an equilibrium with zero
net torque.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

N_PROPELLERS = 6
STATE_DIM = 3 * N_PROPELLERS
ALPHA = slice(0, N_PROPELLERS)
BETA = slice(N_PROPELLERS, 2 * N_PROPELLERS)
OMEGA = slice(2 * N_PROPELLERS, 3 * N_PROPELLERS)

STATE_NAMES = tuple(
    [f"alpha{i}" for i in range(1, 7)]
    + [f"beta{i}" for i in range(1, 7)]
    + [f"omega{i}" for i in range(1, 7)]
)


@dataclass(frozen=True)
class PropellerParams:
    """Geometry and aerodynamic coefficients of one propeller.

    ``spin`` is +1 for counter-clockwise, -1 for clockwise rotation.
    """

    index: int
    arm_angle: float
    arm_length: float
    force_coeff: float
    drag_coeff: float
    spin: int

    def __post_init__(self):
        if self.arm_length <= 0 or self.force_coeff <= 0 or self.drag_coeff <= 0:
            raise ValueError("arm length and aerodynamic coefficients must be positive")
        if self.spin not in (1, -1):
            raise ValueError("spin must be +1 or -1")


@dataclass(frozen=True)
class Airframe:
    """The six propellers of the platform, with array views for vectorized math."""

    propellers: tuple

    def __post_init__(self):
        if len(self.propellers) != N_PROPELLERS:
            raise ValueError(f"expected {N_PROPELLERS} propellers")

    @classmethod
    def star_hexarotor(cls, arm_length=0.246, force_coeff=8.59e-6,
                       drag_coeff=1.37e-7, spin_pattern=(1, -1, 1, -1, 1, -1)):
        props = tuple(
            PropellerParams(
                index=i + 1,
                arm_angle=i * np.pi / 3,
                arm_length=arm_length,
                force_coeff=force_coeff,
                drag_coeff=drag_coeff,
                spin=int(spin_pattern[i]),
            )
            for i in range(N_PROPELLERS)
        )
        return cls(props)

    @cached_property
    def _arrays(self):
        gamma = np.array([p.arm_angle for p in self.propellers])
        ell = np.array([p.arm_length for p in self.propellers])
        positions = np.stack([ell * np.cos(gamma), ell * np.sin(gamma), np.zeros(6)], axis=1)
        return {
            "cos_gamma": np.cos(gamma),
            "sin_gamma": np.sin(gamma),
            "positions": positions,
            "c_f": np.array([p.force_coeff for p in self.propellers]),
            "c_tau": np.array([p.drag_coeff for p in self.propellers]),
            "spin": np.array([p.spin for p in self.propellers], dtype=float),
        }

    @property
    def positions(self):
        return self._arrays["positions"]

    @property
    def spin(self):
        return self._arrays["spin"]

    def hover_state(self, mass, gravity=9.81):
        """Collinear configuration whose thrust balances the weight."""
        c_f = self._arrays["c_f"]
        x = np.zeros(STATE_DIM)
        x[OMEGA] = self.spin * np.sqrt(mass * gravity / (N_PROPELLERS * c_f))
        return x


@dataclass(frozen=True)
class SaturationBox:
    lower: np.ndarray
    upper: np.ndarray
    midpoint: np.ndarray = field(init=False, repr=False, compare=False)
    width: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).copy()
        upper = np.asarray(self.upper, dtype=float).copy()
        if lower.shape != (STATE_DIM,) or upper.shape != (STATE_DIM,):
            raise ValueError("saturation bounds must be 18-vectors")
        if not np.all(lower < upper):
            raise ValueError("every lower bound must be strictly below its upper bound")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "midpoint", 0.5 * (upper + lower))
        object.__setattr__(self, "width", upper - lower)

    @classmethod
    def symmetric(cls, spin_pattern=(1, -1, 1, -1, 1, -1), alpha_max=np.deg2rad(30.0),
                  beta_max=np.deg2rad(30.0), omega_min=100.0, omega_max=1000.0):
        """Tilt bounds +-max, spin bounds signed by rotation direction.

        A counter-clockwise propeller lives in [omega_min, omega_max], a
        clockwise one in [-omega_max, -omega_min], so the allocator can never
        reverse a propeller.
        """
        spin = np.asarray(spin_pattern, dtype=float)
        lower = np.concatenate([
            np.full(6, -alpha_max),
            np.full(6, -beta_max),
            np.where(spin > 0, omega_min, -omega_max),
        ])
        upper = np.concatenate([
            np.full(6, alpha_max),
            np.full(6, beta_max),
            np.where(spin > 0, omega_max, -omega_min),
        ])
        return cls(lower, upper)

    def contains(self, x):
        x = np.asarray(x)
        return bool(np.all((x >= self.lower) & (x <= self.upper)))


def saturate(x, box):
    return np.clip(x, box.lower, box.upper)


def saturated_mask(x, box):
    """True where a component lies strictly outside its closed interval."""
    return (x < box.lower) | (x > box.upper)


def sat_gradient(x, box, epsilon=1e-3):
    """Diagonal of the regularized saturation derivative, as a full matrix.

    Entries are 1 on the closed interval and ``epsilon`` outside it.
    """
    return np.diag(sat_gradient_diag(x, box, epsilon))


def sat_gradient_diag(x, box, epsilon=1e-3):
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return np.where(saturated_mask(x, box), epsilon, 1.0)


def _rz(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _ry(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rx(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def propeller_pose(prop, alpha, beta):
    """Return (position, unit spin axis) of one propeller in body frame."""
    rz = _rz(prop.arm_angle)
    position = rz @ np.array([prop.arm_length, 0.0, 0.0])
    axis = rz @ _ry(beta) @ _rx(alpha) @ np.array([0.0, 0.0, 1.0])
    return position, axis


def propeller_wrench(prop, alpha, beta, omega):
    """Force and torque that one propeller exerts at the body origin."""
    position, axis = propeller_pose(prop, alpha, beta)
    force = prop.force_coeff * omega**2 * axis
    torque = -prop.drag_coeff * omega * abs(omega) * axis + np.cross(position, force)
    return force, torque


def _axes(frame, alpha, beta):
    """Spin axes and their tilt derivatives, each (6, 3), in body frame."""
    a = frame._arrays
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(beta), np.sin(beta)
    cg, sg = a["cos_gamma"], a["sin_gamma"]

    def rotate(vx, vy, vz):
        return np.stack([cg * vx - sg * vy, sg * vx + cg * vy, vz], axis=1)

    z = rotate(sb * ca, -sa, cb * ca)
    dz_dalpha = rotate(-sb * sa, -ca, -cb * sa)
    dz_dbeta = rotate(cb * ca, np.zeros_like(ca), -sb * ca)
    return z, dz_dalpha, dz_dbeta


def wrench_from_state(x, frame):
    """h_a(x) without saturation: total body wrench (f, tau) as a 6-vector."""
    a = frame._arrays
    alpha, beta, omega = x[ALPHA], x[BETA], x[OMEGA]
    z, _, _ = _axes(frame, alpha, beta)
    thrust = a["c_f"] * omega**2
    drag = a["c_tau"] * omega * np.abs(omega)
    forces = thrust[:, None] * z
    torques = -drag[:, None] * z + np.cross(a["positions"], forces)
    return np.concatenate([forces.sum(axis=0), torques.sum(axis=0)])


def total_wrench(x, box, frame):
    """Wrench produced by the actuators, h_a(sat(x))."""
    return wrench_from_state(saturate(np.asarray(x, dtype=float), box), frame)


def wrench_jacobian(x, box, frame):
    """Analytic 6x18 Jacobian of h_a evaluated at sat(x).

    The derivative is taken with respect to the unsaturated argument of
    h_a; the saturation factor is applied by the allocator.
    """
    a = frame._arrays
    xs = saturate(np.asarray(x, dtype=float), box)
    alpha, beta, omega = xs[ALPHA], xs[BETA], xs[OMEGA]
    z, z_a, z_b = _axes(frame, alpha, beta)
    p = a["positions"]
    thrust = a["c_f"] * omega**2
    drag = a["c_tau"] * omega * np.abs(omega)
    dthrust = 2.0 * a["c_f"] * omega
    ddrag = 2.0 * a["c_tau"] * np.abs(omega)

    jac = np.empty((6, STATE_DIM))
    for block, dz, scale_f, scale_d in (
        (ALPHA, z_a, thrust, drag),
        (BETA, z_b, thrust, drag),
        (OMEGA, z, dthrust, ddrag),
    ):
        df = scale_f[:, None] * dz
        dtau = -scale_d[:, None] * dz + np.cross(p, df)
        jac[:3, block] = df.T
        jac[3:, block] = dtau.T
    return jac
