"""Reference trajectories with analytic first and second derivatives."""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ReferenceSample:
    t: float
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    attitude: np.ndarray = field(default_factory=lambda: np.zeros(3))
    attitude_rate: np.ndarray = field(default_factory=lambda: np.zeros(3))
    attitude_acc: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass(frozen=True)
class CircleTrajectory:
    """Horizontal circle centred on the origin, constant attitude."""

    radius: float = 2.0
    rate: float = 0.8
    altitude: float = 0.0
    attitude: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be non-negative")

    def sample(self, t):
        r, w = self.radius, self.rate
        c, s = np.cos(w * t), np.sin(w * t)
        return ReferenceSample(
            t=t,
            position=np.array([r * c, r * s, self.altitude]),
            velocity=np.array([-r * w * s, r * w * c, 0.0]),
            acceleration=np.array([-r * w * w * c, -r * w * w * s, 0.0]),
            attitude=np.array(self.attitude, dtype=float),
        )


@dataclass(frozen=True)
class HoverReference:
    position: tuple = (0.0, 0.0, 0.0)
    attitude: tuple = (0.0, 0.0, 0.0)

    def sample(self, t):
        return ReferenceSample(
            t=t,
            position=np.array(self.position, dtype=float),
            velocity=np.zeros(3),
            acceleration=np.zeros(3),
            attitude=np.array(self.attitude, dtype=float),
        )


@dataclass(frozen=True)
class StepReference:
    """Static set-point that jumps from ``start`` to ``end`` at ``step_time``."""

    start: tuple = (0.0, 0.0, 0.0)
    end: tuple = (1.0, 0.0, 0.0)
    step_time: float = 1.0
    attitude: tuple = (0.0, 0.0, 0.0)

    def sample(self, t):
        target = self.end if t >= self.step_time else self.start
        return HoverReference(target, self.attitude).sample(t)
