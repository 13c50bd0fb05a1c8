"""YAML scenario files.

A config is a mapping of sections; every key has a default, so a file only
needs to state what differs. Tilt quantities are in degrees, spin rates in
rad/s, everything else SI. Unknown sections or keys are rejected, and every
error names the offending key and, when known, its line.

    name: table1_gj10
    allocator: {gamma_j: 10, objective: symmetric}
    trajectory: {type: circle, radius: 2.0, rate: 0.8}
    sim: {duration: 30.0, dt: 0.001}
"""

import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .actuation import Airframe, SaturationBox
from .allocator import OBJECTIVE_EXPONENTS, AllocatorParams, ObjectiveSpec
from .controller import ControllerGains
from .dynamics import PlatformParams, PlatformState
from .errors import ConfigError
from .simulation import Scenario
from .trajectory import CircleTrajectory, HoverReference, StepReference


def _vec(n, kind=float):
    return {"length": n, "kind": kind}


@dataclass(frozen=True)
class PlatformSection:
    mass: float = 2.0
    inertia: tuple = field(default=(0.0217, 0.0217, 0.04), metadata=_vec(3))
    gravity: float = 9.81


@dataclass(frozen=True)
class PropellerSection:
    arm_length: float = 0.246
    force_coeff: float = 8.59e-6
    drag_coeff: float = 1.37e-7
    spin: tuple = field(default=(1, -1, 1, -1, 1, -1), metadata=_vec(6, int))


@dataclass(frozen=True)
class SaturationSection:
    alpha_deg: float = 30.0
    beta_deg: float = 30.0
    omega_min: float = 100.0
    omega_max: float = 1000.0


@dataclass(frozen=True)
class ControllerSection:
    kp: tuple = field(default=(2.0, 2.0, 2.0), metadata=_vec(3))
    kd: tuple = field(default=(1.5, 1.5, 1.5), metadata=_vec(3))
    kp_att: tuple = field(default=(2.0, 2.0, 2.0), metadata=_vec(3))
    kd_att: tuple = field(default=(1.5, 1.5, 1.5), metadata=_vec(3))


@dataclass(frozen=True)
class AllocatorSection:
    gamma_p: float = 5.0
    gamma_j: float = 10.0
    K: tuple = field(default=(3.0,) * 6, metadata=_vec(6))
    epsilon: float = 1e-3
    objective: str = "symmetric"
    mu_alpha: float = 750.0
    mu_beta: float = 750.0
    mu_omega: float = 0.005


TRAJECTORY_KEYS = {
    "circle": {"radius", "rate", "altitude", "attitude"},
    "hover": {"position", "attitude"},
    "step": {"start", "end", "step_time", "attitude"},
}


@dataclass(frozen=True)
class TrajectorySection:
    type: str = "circle"
    radius: float = 2.0
    rate: float = 0.8
    altitude: float = 0.0
    attitude: tuple = field(default=(0.0, 0.0, 0.0), metadata=_vec(3))
    position: tuple = field(default=(0.0, 0.0, 0.0), metadata=_vec(3))
    start: tuple = field(default=(0.0, 0.0, 0.0), metadata=_vec(3))
    end: tuple = field(default=(1.0, 0.0, 0.0), metadata=_vec(3))
    step_time: float = 1.0


@dataclass(frozen=True)
class SimSection:
    duration: float = 30.0
    dt: float = 1e-3
    step_ratio: float = 1.0
    min_substeps: int = 1
    max_substeps: int = 2000


@dataclass(frozen=True)
class InitialSection:
    """Initial conditions; unset entries follow the scenario defaults
    (at rest on the trajectory start, actuators in hover)."""

    position: tuple = field(default=None, metadata=_vec(3))
    velocity: tuple = field(default=(0.0, 0.0, 0.0), metadata=_vec(3))
    attitude: tuple = field(default=(0.0, 0.0, 0.0), metadata=_vec(3))
    attitude_rate: tuple = field(default=(0.0, 0.0, 0.0), metadata=_vec(3))
    alpha_deg: tuple = field(default=None, metadata=_vec(6))
    beta_deg: tuple = field(default=None, metadata=_vec(6))
    omega: tuple = field(default=None, metadata=_vec(6))


@dataclass(frozen=True)
class OutputSection:
    directory: str = None
    record: bool = True
    stride: int = 1


SECTIONS = {
    "platform": PlatformSection,
    "propellers": PropellerSection,
    "saturation": SaturationSection,
    "controller": ControllerSection,
    "allocator": AllocatorSection,
    "trajectory": TrajectorySection,
    "sim": SimSection,
    "initial": InitialSection,
    "output": OutputSection,
}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    platform: PlatformSection = PlatformSection()
    propellers: PropellerSection = PropellerSection()
    saturation: SaturationSection = SaturationSection()
    controller: ControllerSection = ControllerSection()
    allocator: AllocatorSection = AllocatorSection()
    trajectory: TrajectorySection = TrajectorySection()
    sim: SimSection = SimSection()
    initial: InitialSection = InitialSection()
    output: OutputSection = OutputSection()

    def with_sim(self, **changes):
        return dataclasses.replace(self, sim=dataclasses.replace(self.sim, **changes))

    def build(self):
        """The Scenario described by this config."""
        return build_scenario(self)


def _line_index(text):
    """Map key paths like ('sim', 'dt') to 1-based line numbers."""
    lines = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                key = key_node.value
                lines[path + (key,)] = key_node.start_mark.line + 1
                walk(value_node, path + (key,))

    root = yaml.compose(text, Loader=yaml.SafeLoader)
    if root is not None:
        walk(root, ())
    return lines


def _coerce_scalar(value, kind, key, line):
    if kind is bool:
        if isinstance(value, bool):
            return value
        raise ConfigError(f"expected true/false, got {value!r}", key, line)
    if kind is str:
        if isinstance(value, str):
            return value
        raise ConfigError(f"expected a string, got {value!r}", key, line)
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}", key, line)
    try:
        # YAML 1.1 reads 1e-3 (no dot) as a string; accept it as a number
        number = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {value!r}", key, line) from None
    if not np.isfinite(number):
        raise ConfigError(f"must be finite, got {value!r}", key, line)
    if kind is int:
        if number != int(number):
            raise ConfigError(f"expected an integer, got {value!r}", key, line)
        return int(number)
    return number


def _coerce(value, f, key, line):
    meta = f.metadata
    if "length" in meta:
        if value is None and f.default is None:
            return None
        if not isinstance(value, (list, tuple)) or len(value) != meta["length"]:
            raise ConfigError(f"expected a list of {meta['length']} values, got {value!r}",
                              key, line)
        return tuple(_coerce_scalar(v, meta["kind"], key, line) for v in value)
    kind = {"float": float, "int": int, "str": str, "bool": bool}.get(f.type, f.type)
    if value is None and f.default is None:
        return None
    return _coerce_scalar(value, kind, key, line)


def _parse_section(cls, data, section, lines):
    line = lines.get((section,))
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("section must be a mapping", section, line)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    values = {}
    for key, value in data.items():
        dotted = f"{section}.{key}"
        key_line = lines.get((section, key), line)
        if key not in fields:
            raise ConfigError(f"unknown key (allowed: {', '.join(fields)})", dotted, key_line)
        values[key] = _coerce(value, fields[key], dotted, key_line)
    return cls(**values), set(data)


def _check(cond, message, key, lines):
    if not cond:
        raise ConfigError(message, key, lines.get(tuple(key.split("."))))


def _validate(cfg, given, lines):
    p, pr, sat, al, tr, sim = (cfg.platform, cfg.propellers, cfg.saturation, cfg.allocator,
                               cfg.trajectory, cfg.sim)
    _check(p.mass > 0, "must be positive", "platform.mass", lines)
    _check(all(v > 0 for v in p.inertia), "entries must be positive", "platform.inertia", lines)
    _check(p.gravity >= 0, "must be non-negative", "platform.gravity", lines)
    _check(pr.arm_length > 0, "must be positive", "propellers.arm_length", lines)
    _check(pr.force_coeff > 0, "must be positive", "propellers.force_coeff", lines)
    _check(pr.drag_coeff >= 0, "must be non-negative", "propellers.drag_coeff", lines)
    _check(all(s in (1, -1) for s in pr.spin), "entries must be +1 or -1", "propellers.spin",
           lines)
    _check(0 < sat.alpha_deg < 90, "must be in (0, 90)", "saturation.alpha_deg", lines)
    _check(0 < sat.beta_deg < 90, "must be in (0, 90)", "saturation.beta_deg", lines)
    _check(0 < sat.omega_min, "must be positive", "saturation.omega_min", lines)
    _check(sat.omega_min < sat.omega_max, "must exceed omega_min", "saturation.omega_max", lines)
    for name in ("kp", "kd", "kp_att", "kd_att"):
        _check(all(v > 0 for v in getattr(cfg.controller, name)), "entries must be positive",
               f"controller.{name}", lines)
    _check(al.gamma_p > 0, "must be positive", "allocator.gamma_p", lines)
    _check(al.gamma_j >= 0, "must be non-negative", "allocator.gamma_j", lines)
    _check(all(k > -1 for k in al.K), "entries must exceed -1 for A - BK to be Hurwitz",
           "allocator.K", lines)
    _check(al.epsilon > 0, "must be positive", "allocator.epsilon", lines)
    _check(al.objective in OBJECTIVE_EXPONENTS,
           f"must be one of {', '.join(OBJECTIVE_EXPONENTS)}", "allocator.objective", lines)
    for name in ("mu_alpha", "mu_beta", "mu_omega"):
        _check(getattr(al, name) > 0, "must be positive", f"allocator.{name}", lines)
    _check(tr.type in TRAJECTORY_KEYS, f"must be one of {', '.join(TRAJECTORY_KEYS)}",
           "trajectory.type", lines)
    extra = given.get("trajectory", set()) - TRAJECTORY_KEYS[tr.type] - {"type"}
    if extra:
        key = sorted(extra)[0]
        _check(False, f"not used by trajectory type '{tr.type}'", f"trajectory.{key}", lines)
    _check(tr.radius >= 0, "must be non-negative", "trajectory.radius", lines)
    _check(sim.dt > 0, "must be positive", "sim.dt", lines)
    _check(sim.duration >= 0, "must be non-negative", "sim.duration", lines)
    _check(sim.step_ratio > 0, "must be positive", "sim.step_ratio", lines)
    _check(sim.min_substeps >= 1, "must be at least 1", "sim.min_substeps", lines)
    _check(sim.max_substeps >= sim.min_substeps, "must be at least min_substeps",
           "sim.max_substeps", lines)
    init = cfg.initial
    partial = [init.alpha_deg is None, init.beta_deg is None, init.omega is None]
    _check(all(partial) or not any(partial),
           "alpha_deg, beta_deg and omega must be given together", "initial", lines)
    _check(cfg.output.stride >= 1, "must be at least 1", "output.stride", lines)


def parse_config(text, source="<string>"):
    """Parse YAML text into a validated ScenarioConfig."""
    try:
        data = yaml.safe_load(text)
        lines = _line_index(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"{source}: invalid YAML ({getattr(exc, 'problem', exc)})",
                          line=mark.line + 1 if mark else None) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")

    values, given = {}, {}
    for key, value in data.items():
        if key == "name":
            values["name"] = _coerce_scalar(value, str, "name", lines.get(("name",)))
        elif key in SECTIONS:
            values[key], given[key] = _parse_section(SECTIONS[key], value, key, lines)
        else:
            raise ConfigError(f"unknown section (allowed: name, {', '.join(SECTIONS)})", key,
                              lines.get((key,)))
    cfg = ScenarioConfig(**values)
    _validate(cfg, given, lines)
    try:
        build_scenario(cfg)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return cfg


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path))


def config_to_dict(cfg):
    """Plain mapping suitable for YAML; unset optional entries are omitted."""
    out = {"name": cfg.name}
    for name in SECTIONS:
        section = {}
        for f in dataclasses.fields(SECTIONS[name]):
            value = getattr(getattr(cfg, name), f.name)
            if value is None:
                continue
            if name == "trajectory" and f.name not in TRAJECTORY_KEYS[cfg.trajectory.type] \
                    and f.name != "type":
                continue
            section[f.name] = list(value) if isinstance(value, tuple) else value
        out[name] = section
    return out


def dump_config(cfg):
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None)


def write_config(cfg, path):
    path = Path(path)
    path.write_text(dump_config(cfg))
    return path


def _trajectory(tr):
    if tr.type == "circle":
        return CircleTrajectory(tr.radius, tr.rate, tr.altitude, tuple(tr.attitude))
    if tr.type == "hover":
        return HoverReference(tuple(tr.position), tuple(tr.attitude))
    return StepReference(tuple(tr.start), tuple(tr.end), tr.step_time, tuple(tr.attitude))


def build_scenario(cfg):
    p, pr, sat, c, al, sim, init = (cfg.platform, cfg.propellers, cfg.saturation,
                                    cfg.controller, cfg.allocator, cfg.sim, cfg.initial)
    trajectory = _trajectory(cfg.trajectory)
    position = init.position if init.position is not None \
        else tuple(trajectory.sample(0.0).position)
    platform_state = PlatformState(np.array(position, float), np.array(init.velocity, float),
                                   np.array(init.attitude, float),
                                   np.array(init.attitude_rate, float))
    actuators = None
    if init.omega is not None:
        actuators = np.concatenate([np.deg2rad(init.alpha_deg), np.deg2rad(init.beta_deg),
                                    np.array(init.omega, float)])
    objective = ObjectiveSpec.named(al.objective, mu_alpha=al.mu_alpha, mu_beta=al.mu_beta,
                                    mu_omega=al.mu_omega)
    return Scenario(
        platform=PlatformParams(p.mass, np.diag(p.inertia), p.gravity),
        airframe=Airframe.star_hexarotor(pr.arm_length, pr.force_coeff, pr.drag_coeff, pr.spin),
        box=SaturationBox.symmetric(pr.spin, np.deg2rad(sat.alpha_deg),
                                    np.deg2rad(sat.beta_deg), sat.omega_min, sat.omega_max),
        gains=ControllerGains(np.diag(c.kp), np.diag(c.kd), np.diag(c.kp_att),
                              np.diag(c.kd_att)),
        allocator=AllocatorParams(al.gamma_p, al.gamma_j, np.diag(al.K), al.epsilon, objective),
        trajectory=trajectory,
        initial_platform=platform_state,
        initial_actuators=actuators,
        duration=sim.duration,
        dt=sim.dt,
        step_ratio=sim.step_ratio,
        min_substeps=sim.min_substeps,
        max_substeps=sim.max_substeps,
        name=cfg.name,
    )


BUNDLED_PACKAGE = "dualtilt.configs"


def bundled_names():
    root = resources.files(BUNDLED_PACKAGE)
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def bundled_path(name):
    root = resources.files(BUNDLED_PACKAGE)
    candidate = root / f"{name}.yaml"
    if not candidate.is_file():
        raise ConfigError(f"no bundled config '{name}' (available: {', '.join(bundled_names())})")
    return Path(str(candidate))


def resolve_config(spec):
    """Load ``spec`` as a path if it exists, otherwise as a bundled config name."""
    path = Path(spec)
    if path.is_file():
        return load_config(path)
    if path.suffix or "/" in spec:
        raise ConfigError(f"config file not found: {spec}")
    return load_config(bundled_path(spec))
