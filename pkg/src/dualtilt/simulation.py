"""Fixed-step closed-loop simulation of platform, actuators and controllers.

The high-level controller is sampled: every ``dt`` it evaluates the commanded
wrench u* and its backward-difference rate, both held over the step. The
allocator is part of the continuous actuator loop x_a' = u_a(x_a; u*, u*'),
integrated jointly with the platform by classical RK4 sub-steps.

The allocator flow is stiff: near the constrained optimum its fastest
null-space mode decays at about 2e4 1/s with the default weights, so holding
u_a over a 1 ms step diverges. At the start of every control step the
sub-step count is chosen so that rate * h <= ``step_ratio``, where rate
bounds the flow's decay rates (see ``allocation_stiffness``). The default
ratio of 1 sits well inside RK4's real-axis stability limit of 2.78.

The integrated actuator state is never clamped: saturation only acts
through the output map and the allocator's saturation gradient.
"""

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .actuation import STATE_DIM, Airframe, SaturationBox, total_wrench
from .allocator import RANK_TOL, AllocatorDiagnostics, AllocatorParams, allocation_stiffness, \
    allocator_step
from .controller import CommandDifferentiator, ControllerGains, wrench_command
from .dynamics import SINGULARITY_TOL, PlatformParams, PlatformState, check_chart, \
    dynamics_vector
from .errors import KinematicSingularity, NonFiniteState, StepLimitWarning
from .trajectory import CircleTrajectory

PLATFORM_DIM = 12


@dataclass(frozen=True)
class Scenario:
    platform: PlatformParams = field(default_factory=PlatformParams)
    airframe: Airframe = field(default_factory=Airframe.star_hexarotor)
    box: SaturationBox = field(default_factory=SaturationBox.symmetric)
    gains: ControllerGains = field(default_factory=ControllerGains)
    allocator: AllocatorParams = field(default_factory=AllocatorParams)
    trajectory: object = field(default_factory=CircleTrajectory)
    initial_platform: PlatformState = None
    initial_actuators: np.ndarray = None
    duration: float = 30.0
    dt: float = 1e-3
    step_ratio: float = 1.0
    min_substeps: int = 1
    max_substeps: int = 2000
    name: str = "scenario"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.step_ratio > 0:
            raise ValueError("step_ratio must be positive")
        if not 1 <= int(self.min_substeps) <= int(self.max_substeps):
            raise ValueError("need 1 <= min_substeps <= max_substeps")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")
        if self.initial_platform is None:
            p0 = self.trajectory.sample(0.0).position
            object.__setattr__(self, "initial_platform", PlatformState.at_rest(p0))
        if self.initial_actuators is None:
            x0 = self.airframe.hover_state(self.platform.mass, self.platform.gravity)
            object.__setattr__(self, "initial_actuators", x0)
        x0 = np.asarray(self.initial_actuators, dtype=float)
        if x0.shape != (STATE_DIM,):
            raise ValueError("initial actuator state must be an 18-vector")
        if not self.box.contains(x0):
            raise ValueError("initial actuator state is outside the saturation box")
        object.__setattr__(self, "initial_actuators", x0)

    @property
    def n_steps(self):
        """Number of integration steps; the record has n_steps + 1 rows."""
        return int(math.floor(self.duration / self.dt + 1e-9))

    def with_overrides(self, **changes):
        return replace(self, **changes)


@dataclass
class RunRecord:
    """Per-step time series of a run, one row per grid point."""

    t: np.ndarray
    platform: np.ndarray        # (n, 12) position, velocity, attitude, attitude rate
    actuators: np.ndarray       # (n, 18) alpha, beta, omega
    u_star: np.ndarray          # (n, 6) commanded wrench
    u_star_dot: np.ndarray      # (n, 6)
    u_v: np.ndarray             # (n, 6) produced wrench
    u_vc: np.ndarray            # (n, 6)
    u_y: np.ndarray             # (n, 18)
    u_j: np.ndarray             # (n, 18)
    objective: np.ndarray       # (n,)
    saturated: np.ndarray       # (n, 18) bool
    sigma_min: np.ndarray       # (n,)
    damped: np.ndarray          # (n,) bool
    stiffness: np.ndarray       # (n,) bound on the allocator decay rate, 1/s
    substeps: np.ndarray        # (n,) RK4 sub-steps taken from this row to the next
    name: str = "run"

    @classmethod
    def allocate(cls, n, name="run"):
        return cls(
            t=np.zeros(n), platform=np.zeros((n, 12)), actuators=np.zeros((n, 18)),
            u_star=np.zeros((n, 6)), u_star_dot=np.zeros((n, 6)), u_v=np.zeros((n, 6)),
            u_vc=np.zeros((n, 6)), u_y=np.zeros((n, 18)), u_j=np.zeros((n, 18)),
            objective=np.zeros(n), saturated=np.zeros((n, 18), dtype=bool),
            sigma_min=np.zeros(n), damped=np.zeros(n, dtype=bool), stiffness=np.zeros(n),
            substeps=np.zeros(n, dtype=np.int64), name=name,
        )

    def __len__(self):
        return len(self.t)

    def truncated(self, n):
        fields = {k: (v[:n] if isinstance(v, np.ndarray) else v) for k, v in vars(self).items()}
        return RunRecord(**fields)

    @property
    def wrench_error(self):
        return self.u_v - self.u_star

    @property
    def saturation_events(self):
        return int(self.saturated.any(axis=1).sum())


@dataclass
class StepRow:
    t: float
    platform: np.ndarray
    actuators: np.ndarray
    u_star: np.ndarray
    u_star_dot: np.ndarray
    u_a: np.ndarray
    diagnostics: object
    stiffness: float
    substeps: int = 0


def _kernel_args(sc):
    a = sc.airframe._arrays
    geo = (a["cos_gamma"], a["sin_gamma"], a["positions"][:, 0].copy(),
           a["positions"][:, 1].copy(), a["c_f"], a["c_tau"])
    box = (np.array(sc.box.lower), np.array(sc.box.upper), sc.box.midpoint, sc.box.width)
    al = sc.allocator
    obj = al.objective
    alloc = (float(al.gamma_p), float(al.gamma_j), float(al.epsilon),
             float(obj.alpha_exponent), float(obj.beta_exponent),
             float(obj.mu_alpha), float(obj.mu_beta), float(obj.mu_omega))
    plat = (float(sc.platform.mass), np.asarray(sc.platform.inertia),
            np.asarray(sc.platform.inertia_inv), float(sc.platform.gravity))
    return geo, box, alloc, np.ascontiguousarray(al.K), plat


def range_rate(params):
    """Fastest wrench-space decay rate of the allocator, gamma_p * |I + K|."""
    return float(params.gamma_p * np.linalg.norm(np.eye(6) + params.K, 2))


def substep_count(scenario, rate):
    """RK4 sub-steps per control step for a flow decaying at ``rate``."""
    n = int(math.ceil(scenario.dt * rate / scenario.step_ratio))
    return min(max(n, int(scenario.min_substeps)), int(scenario.max_substeps))


def rk4_step(f, s, h):
    """One classical Runge-Kutta step of s' = f(s)."""
    k1 = f(s)
    k2 = f(s + 0.5 * h * k1)
    k3 = f(s + 0.5 * h * k2)
    k4 = f(s + h * k3)
    return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _reference_rows(ref):
    return np.array([ref.position, ref.velocity, ref.acceleration, ref.attitude,
                     ref.attitude_rate, ref.attitude_acc], dtype=float)


class Simulator:
    """Owns the command differentiator; advances a scenario one step at a time.

    With ``compiled=False`` the sub-steps run through the numpy reference
    functions instead of the compiled kernel (slow; used for cross-checks).
    """

    def __init__(self, scenario, compiled=True):
        self.scenario = scenario
        self.compiled = compiled
        self.differentiator = CommandDifferentiator()
        self._range_rate = range_rate(scenario.allocator)
        if compiled:
            self._args = _kernel_args(scenario)
            g = scenario.gains
            self._gains = tuple(np.ascontiguousarray(k) for k in (g.kp, g.kd, g.kp_att, g.kd_att))
            self._steps = (float(scenario.step_ratio), float(scenario.min_substeps),
                           float(scenario.max_substeps), self._range_rate)

    def evaluate(self, platform, actuators, t):
        """Controller and allocator outputs at the current state."""
        sc = self.scenario
        ref = sc.trajectory.sample(t)
        if self.compiled:
            check_chart(platform[6:9])
            u_star = _kernels.control_wrench(platform, _reference_rows(ref), self._gains,
                                             self._args[4])
        else:
            u_star = wrench_command(platform, ref, sc.gains, sc.platform)
        u_star_dot = self.differentiator.update(u_star, sc.dt)
        if self.compiled:
            geo, box, alloc, K, _ = self._args
            u_v, u_vc, u_y, u_j, sat, s_min, s_max, obj, rate = _kernels.diagnostics(
                actuators, u_star, u_star_dot, geo, box, alloc, K, self._range_rate)
            diag = AllocatorDiagnostics(u_v, u_vc, u_y, u_j, sat, s_min,
                                        bool(s_min < RANK_TOL * s_max), obj)
            u_a = u_y - u_j
        else:
            u_a, diag = allocator_step(actuators, u_star, u_star_dot, sc.box, sc.airframe,
                                       sc.allocator)
            rate = allocation_stiffness(actuators, u_star, u_star_dot, sc.box, sc.airframe,
                                        sc.allocator)
        return StepRow(t, platform, actuators, u_star, u_star_dot, u_a, diag, float(rate))

    def _reference_derivative(self, s, u_star, u_star_dot):
        sc = self.scenario
        x = s[PLATFORM_DIM:]
        u_a, _ = allocator_step(x, u_star, u_star_dot, sc.box, sc.airframe, sc.allocator)
        wrench = total_wrench(x, sc.box, sc.airframe)
        ds_platform = dynamics_vector(s[:PLATFORM_DIM], wrench, sc.platform)
        return np.concatenate([ds_platform, u_a])

    def _integrate_reference(self, s, u_star, u_star_dot, n_sub):
        sc = self.scenario
        h = sc.dt / n_sub

        def f(state):
            return self._reference_derivative(state, u_star, u_star_dot)

        for _ in range(n_sub):
            s = rk4_step(f, s, h)
            if not np.all(np.isfinite(s)):
                raise NonFiniteState("non-finite state")
        return s

    def integrate(self, platform, actuators, u_star, u_star_dot, t=0.0):
        """Advance (platform, actuators) by one control step with u*, u*' held.

        Returns (platform, actuators, number of RK4 sub-steps).
        """
        sc = self.scenario
        s = np.concatenate([platform, actuators])
        if self.compiled:
            geo, box, alloc, K, plat = self._args
            s, status, n_sub = _kernels.integrate(s, u_star, u_star_dot, sc.dt, self._steps,
                                                  geo, box, alloc, K, plat, SINGULARITY_TOL)
            if status == 1:
                raise KinematicSingularity(f"pitch reached the Euler singularity near t={t:.6f}")
            if status == 2:
                raise NonFiniteState(f"non-finite state after step at t={t:.6f}")
        else:
            check_chart(platform[6:9])
            rate = allocation_stiffness(actuators, u_star, u_star_dot, sc.box, sc.airframe,
                                        sc.allocator)
            n_sub = substep_count(sc, rate)
            s = self._integrate_reference(s, u_star, u_star_dot, n_sub)
        return s[:PLATFORM_DIM], s[PLATFORM_DIM:], int(n_sub)

    def step(self, platform, actuators, t):
        """One closed-loop step. Returns (next platform, next actuators, row)."""
        row = self.evaluate(platform, actuators, t)
        p_next, x_next, row.substeps = self.integrate(platform, actuators, row.u_star,
                                                      row.u_star_dot, t)
        if not (np.all(np.isfinite(p_next)) and np.all(np.isfinite(x_next))):
            raise NonFiniteState(f"non-finite state after step at t={t:.6f}")
        return p_next, x_next, row


def _store(record, k, row):
    d = row.diagnostics
    record.t[k] = row.t
    record.platform[k] = row.platform
    record.actuators[k] = row.actuators
    record.u_star[k] = row.u_star
    record.u_star_dot[k] = row.u_star_dot
    record.u_v[k] = d.u_v
    record.u_vc[k] = d.u_vc
    record.u_y[k] = d.u_y
    record.u_j[k] = d.u_j
    record.objective[k] = d.objective
    record.saturated[k] = d.saturated
    record.sigma_min[k] = d.sigma_min
    record.damped[k] = d.damped
    record.stiffness[k] = row.stiffness
    record.substeps[k] = row.substeps


def run(scenario, progress=None, compiled=True):
    """Simulate ``scenario`` over its full duration.

    Identical scenarios produce bit-identical records. On a kinematic
    singularity or a non-finite state the raised error carries the partial
    record.
    """
    n = scenario.n_steps
    record = RunRecord.allocate(n + 1, name=scenario.name)
    sim = Simulator(scenario, compiled=compiled)
    platform = scenario.initial_platform.to_vector()
    actuators = scenario.initial_actuators.copy()
    k = 0
    try:
        for k in range(n + 1):
            t = k * scenario.dt
            if k == n:
                _store(record, k, sim.evaluate(platform, actuators, t))
                break
            platform, actuators, row = sim.step(platform, actuators, t)
            _store(record, k, row)
            if progress is not None:
                progress(k, n)
    except (KinematicSingularity, NonFiniteState) as exc:
        exc.record = record.truncated(k)
        raise
    capped = int(np.sum(record.substeps[:-1] >= scenario.max_substeps)) if n else 0
    if capped:
        warnings.warn(f"{capped} steps hit max_substeps={scenario.max_substeps}; "
                      "RK4 may be outside its stability region there", StepLimitWarning,
                      stacklevel=2)
    return record


def allocator_response(scenario, u_star, duration, actuators=None, compiled=True):
    """Actuator loop alone, driven by a constant command u* (so u*' = 0).

    The platform is held at its initial state every step; the allocator does
    not depend on it. Returns (t, actuators, u_v) on the scenario's grid.
    """
    sim = Simulator(scenario, compiled=compiled)
    u_star = np.asarray(u_star, dtype=float)
    rate = np.zeros(6)
    platform = scenario.initial_platform.to_vector()
    x = (scenario.initial_actuators if actuators is None else np.asarray(actuators)).astype(float)
    n = int(math.floor(duration / scenario.dt + 1e-9))
    t = scenario.dt * np.arange(n + 1)
    xs = np.zeros((n + 1, STATE_DIM))
    u_v = np.zeros((n + 1, 6))
    for k in range(n + 1):
        xs[k] = x
        u_v[k] = total_wrench(x, scenario.box, scenario.airframe)
        if k < n:
            _, x, _ = sim.integrate(platform, x, u_star, rate, t[k])
    return t, xs, u_v
