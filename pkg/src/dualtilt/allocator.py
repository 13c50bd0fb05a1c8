"""
Dynamic control allocation by gradient flow on the actuator state.

The actuator system is a pure integrator, x_a' = u_a, with output
u_v = h_a(sat(x_a)). The allocator returns

    u_a = u_y - u_j
    u_y = gamma_p * M^+ (u_vc - u_v)
    u_j = gamma_j * M_perp * S^T grad J(sat(x_a))

with S the regularized saturation derivative and M = dh_a * S. The
reference wrench

    u_vc = B^-1 (u*' - A u*) - K (u_v - u*),   A = -gamma_p I, B = gamma_p I

makes the wrench error obey e' = (A - B K) e. u_j lives in the null space
of M, so it reshapes the actuator configuration without moving the wrench.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .actuation import ALPHA, BETA, N_PROPELLERS, OMEGA, STATE_DIM, sat_gradient_diag, \
    saturate, saturated_mask, total_wrench, wrench_jacobian
from .errors import RankDeficientWarning

RANK_TOL = 1e-9
DAMPING = 1e-6

OBJECTIVE_EXPONENTS = {
    "symmetric": (6, 6),
    "alpha": (2, 6),
    "beta": (6, 2),
}


@dataclass(frozen=True)
class ObjectiveSpec:
    """Box-centred tilt penalty plus a quadratic spin-rate penalty.

    J = sum_i mu_a (a~_i / da)^na + mu_b (b~_i / db)^nb + mu_w w_i^2

    with tilde quantities measured from the box midpoint and normalized by
    the box width. ``alpha`` steepens the cant-angle penalty (exponent 2),
    ``beta`` the dihedral one.
    """

    alpha_exponent: int = 6
    beta_exponent: int = 6
    mu_alpha: float = 750.0
    mu_beta: float = 750.0
    mu_omega: float = 1.0 / 200.0

    def __post_init__(self):
        for n in (self.alpha_exponent, self.beta_exponent):
            if n < 2 or n % 2:
                raise ValueError("tilt exponents must be even and >= 2")
        if min(self.mu_alpha, self.mu_beta, self.mu_omega) <= 0:
            raise ValueError("objective weights must be positive")

    @classmethod
    def named(cls, kind, **weights):
        try:
            na, nb = OBJECTIVE_EXPONENTS[kind]
        except KeyError:
            raise ValueError(f"unknown objective '{kind}'") from None
        return cls(na, nb, **weights)

    @property
    def kind(self):
        for name, pair in OBJECTIVE_EXPONENTS.items():
            if pair == (self.alpha_exponent, self.beta_exponent):
                return name
        return None


def objective_value(x, spec, box):
    """J evaluated at sat(x)."""
    xs = saturate(np.asarray(x, dtype=float), box)
    rel = (xs - box.midpoint) / box.width
    return float(
        spec.mu_alpha * np.sum(rel[ALPHA] ** spec.alpha_exponent)
        + spec.mu_beta * np.sum(rel[BETA] ** spec.beta_exponent)
        + spec.mu_omega * np.sum(xs[OMEGA] ** 2)
    )


def objective_gradient(x, spec, box):
    """grad J evaluated at sat(x)."""
    xs = saturate(np.asarray(x, dtype=float), box)
    dev = xs - box.midpoint
    w = box.width
    grad = np.empty(STATE_DIM)
    na, nb = spec.alpha_exponent, spec.beta_exponent
    grad[ALPHA] = na * spec.mu_alpha * dev[ALPHA] ** (na - 1) / w[ALPHA] ** na
    grad[BETA] = nb * spec.mu_beta * dev[BETA] ** (nb - 1) / w[BETA] ** nb
    grad[OMEGA] = 2.0 * spec.mu_omega * xs[OMEGA]
    return grad


@dataclass
class _Inverse:
    """Factorization of M M^T shared by the pseudo-inverse and projector."""

    matrix: np.ndarray
    gram: np.ndarray
    sigma_min: float
    sigma_max: float
    damped: bool

    @classmethod
    def of(cls, M):
        M = np.asarray(M, dtype=float)
        sv = np.linalg.svd(M, compute_uv=False)
        sigma_max, sigma_min = float(sv[0]), float(sv[-1])
        damped = sigma_min < RANK_TOL * sigma_max
        gram = M @ M.T
        if damped:
            gram = gram + DAMPING**2 * np.eye(M.shape[0])
        return cls(M, gram, sigma_min, sigma_max, damped)

    def apply_pinv(self, v):
        return self.matrix.T @ np.linalg.solve(self.gram, v)

    def pinv(self):
        return self.matrix.T @ np.linalg.inv(self.gram)

    def project_null(self, v):
        return v - self.apply_pinv(self.matrix @ v)


def _warn_if_damped(inv):
    if inv.damped:
        warnings.warn(
            f"matrix is rank deficient (sigma_min={inv.sigma_min:.3e}); "
            "using damped pseudo-inverse",
            RankDeficientWarning,
            stacklevel=3,
        )


def right_pseudoinverse(M):
    """M^T (M M^T)^-1, damped when M loses row rank."""
    inv = _Inverse.of(M)
    _warn_if_damped(inv)
    return inv.pinv()


def null_projector(M):
    """Orthogonal projector I - M^+ M onto the null space of M."""
    inv = _Inverse.of(M)
    _warn_if_damped(inv)
    n = inv.matrix.shape[1]
    return np.eye(n) - inv.pinv() @ inv.matrix


@dataclass(frozen=True)
class AllocatorParams:
    gamma_p: float = 5.0
    gamma_j: float = 10.0
    K: np.ndarray = field(default_factory=lambda: 3.0 * np.eye(6))
    epsilon: float = 1e-3
    objective: ObjectiveSpec = field(default_factory=ObjectiveSpec)

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        if K.ndim == 1:
            K = np.diag(K)
        if K.shape != (6, 6):
            raise ValueError("K must be 6x6")
        object.__setattr__(self, "K", K)
        if self.gamma_p <= 0:
            raise ValueError("gamma_p must be positive")
        if self.gamma_j < 0:
            raise ValueError("gamma_j must be non-negative")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if np.any(np.linalg.eigvals(self.A - self.B @ K).real >= 0):
            raise ValueError("A - B K is not Hurwitz")

    @property
    def A(self):
        return -self.gamma_p * np.eye(6)

    @property
    def B(self):
        return self.gamma_p * np.eye(6)


def command_filter(u_star, u_star_dot, u_v, params):
    """Reference wrench u_vc for the first-order wrench dynamics."""
    u_star = np.asarray(u_star, dtype=float)
    ff = np.linalg.solve(params.B, np.asarray(u_star_dot) - params.A @ u_star)
    return ff - params.K @ (np.asarray(u_v) - u_star)


@dataclass
class AllocatorDiagnostics:
    u_v: np.ndarray
    u_vc: np.ndarray
    u_y: np.ndarray
    u_j: np.ndarray
    saturated: np.ndarray
    sigma_min: float
    damped: bool
    objective: float

    @property
    def u_y_norm(self):
        return float(np.linalg.norm(self.u_y))

    @property
    def u_j_norm(self):
        return float(np.linalg.norm(self.u_j))


def effective_jacobian(x, box, frame, epsilon):
    """M = dh_a(sat(x)) @ S(x), with S the regularized saturation gradient."""
    return wrench_jacobian(x, box, frame) * sat_gradient_diag(x, box, epsilon)


def allocator_step(x, u_star, u_star_dot, box, frame, params):
    """Actuator control u_a and diagnostics for one evaluation."""
    x = np.asarray(x, dtype=float)
    s_diag = sat_gradient_diag(x, box, params.epsilon)
    M = wrench_jacobian(x, box, frame) * s_diag
    inv = _Inverse.of(M)

    u_v = total_wrench(x, box, frame)
    u_vc = command_filter(u_star, u_star_dot, u_v, params)
    u_y = params.gamma_p * inv.apply_pinv(u_vc - u_v)
    if params.gamma_j > 0:
        grad = objective_gradient(x, params.objective, box)
        u_j = params.gamma_j * inv.project_null(s_diag * grad)
    else:
        u_j = np.zeros(STATE_DIM)

    diag = AllocatorDiagnostics(
        u_v=u_v,
        u_vc=u_vc,
        u_y=u_y,
        u_j=u_j,
        saturated=saturated_mask(x, box),
        sigma_min=inv.sigma_min,
        damped=inv.damped,
        objective=objective_value(x, params.objective, box),
    )
    return u_y - u_j, diag


def flow_multipliers(x, u_star, u_star_dot, box, frame, params):
    """Wrench-space coefficients of the allocator output.

    Returns (a, nu) with u_y = gamma_p M^T a and u_j = gamma_j (S grad J - M^T nu).
    """
    s_diag = sat_gradient_diag(x, box, params.epsilon)
    M = wrench_jacobian(x, box, frame) * s_diag
    inv = _Inverse.of(M)
    u_v = total_wrench(x, box, frame)
    u_vc = command_filter(u_star, u_star_dot, u_v, params)
    a = np.linalg.solve(inv.gram, u_vc - u_v)
    if params.gamma_j == 0:
        return a, np.zeros(6)
    nu = np.linalg.solve(inv.gram, M @ (s_diag * objective_gradient(x, params.objective, box)))
    return a, nu


def curvature_blocks(x, multipliers, box, frame, spec, objective_weight=1.0):
    """Per-propeller 3x3 blocks of w * Hess J - sum_k m_k Hess h_k.

    Blocks are in (alpha_i, beta_i, omega_i) and evaluated at sat(x);
    cross-propeller terms vanish identically. With w = 1 and m the
    projection multipliers this is the Hessian of the Lagrangian J - nu^T h_a.
    """
    xs = saturate(np.asarray(x, dtype=float), box)
    a = frame._arrays
    alpha, beta, w = xs[ALPHA], xs[BETA], xs[OMEGA]
    ca, sa, cb, sb = np.cos(alpha), np.sin(alpha), np.cos(beta), np.sin(beta)
    cg, sg = a["cos_gamma"], a["sin_gamma"]
    c_f, c_tau = a["c_f"], a["c_tau"]
    m = np.asarray(multipliers, dtype=float)
    m_f, m_tau = m[:3], m[3:]
    # m_tau . (p x v) = (m_tau x p) . v
    q = m_f + np.cross(m_tau, a["positions"])

    def rotate(vx, vy, vz):
        return np.stack([cg * vx - sg * vy, sg * vx + cg * vy, vz], axis=1)

    zero = np.zeros_like(ca)
    thrust, dthrust, ddthrust = c_f * w**2, 2 * c_f * w, 2 * c_f * np.ones_like(w)
    drag, ddrag, dddrag = c_tau * w * np.abs(w), 2 * c_tau * np.abs(w), 2 * c_tau * np.sign(w)
    pairs = {
        (0, 0): (rotate(-sb * ca, sa, -cb * ca), thrust, drag),
        (0, 1): (rotate(-cb * sa, zero, sb * sa), thrust, drag),
        (1, 1): (rotate(-sb * ca, zero, -cb * ca), thrust, drag),
        (0, 2): (rotate(-sb * sa, -ca, -cb * sa), dthrust, ddrag),
        (1, 2): (rotate(cb * ca, zero, -sb * ca), dthrust, ddrag),
        (2, 2): (rotate(sb * ca, -sa, cb * ca), ddthrust, dddrag),
    }
    H = np.zeros((N_PROPELLERS, 3, 3))
    for (r, c), (d, fc, dc) in pairs.items():
        val = -(fc * np.sum(q * d, axis=1) - dc * (d @ m_tau))
        H[:, r, c] = val
        H[:, c, r] = val

    if objective_weight:
        dev, width = xs - box.midpoint, box.width
        na, nb = spec.alpha_exponent, spec.beta_exponent
        H[:, 0, 0] += objective_weight * na * (na - 1) * spec.mu_alpha \
            * dev[ALPHA] ** (na - 2) / width[ALPHA] ** na
        H[:, 1, 1] += objective_weight * nb * (nb - 1) * spec.mu_beta \
            * dev[BETA] ** (nb - 2) / width[BETA] ** nb
        H[:, 2, 2] += objective_weight * 2 * spec.mu_omega
    return H


def allocation_stiffness(x, u_star, u_star_dot, box, frame, params):
    """Estimate of the fastest decay rate of the allocator flow at x (1/s).

    With the wrench-space coefficients held, u_a linearizes to -S C S where
    C = gamma_j Hess J - sum_k m_k Hess h_k and m = gamma_j nu + gamma_p a.
    The null-space part is bounded by the largest absolute row sum of the
    per-propeller blocks of S C S; wrench-space modes decay at most at
    gamma_p * |I + K|.

    With no component saturated this bounds the spectral radius of the flow
    Jacobian from above. Saturated components make M ill-conditioned and the
    neglected derivatives of (M M^T)^-1 can dominate, so there it is only an
    estimate.
    """
    range_rate = params.gamma_p * np.linalg.norm(np.eye(6) + params.K, 2)
    a, nu = flow_multipliers(x, u_star, u_star_dot, box, frame, params)
    C = curvature_blocks(x, params.gamma_j * nu + params.gamma_p * a, box, frame,
                         params.objective, objective_weight=params.gamma_j)
    s = sat_gradient_diag(x, box, params.epsilon).reshape(3, N_PROPELLERS).T
    scaled = np.abs(C * s[:, :, None] * s[:, None, :])
    return float(scaled.sum(axis=2).max() + range_rate)
