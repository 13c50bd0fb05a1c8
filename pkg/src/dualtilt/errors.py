"""Exception and warning types shared across the package."""


class SimulationError(RuntimeError):
    """A run aborted. ``record`` holds the rows produced before the abort."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class KinematicSingularity(SimulationError):
    """Pitch reached the Euler-angle singularity (|cos(theta)| too small)."""


class NonFiniteState(SimulationError):
    """A state component became NaN or infinite."""


class RankDeficientWarning(RuntimeWarning):
    """Damped pseudo-inverse used because the matrix lost row rank."""


class ConfigError(ValueError):
    def __init__(self, message, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line


class InsufficientData(ValueError):
    pass


class IllConditioned(ValueError):
    pass


class GridMismatch(ValueError):
    pass


class StepLimitWarning(RuntimeWarning):
    """The stiffness bound asked for more RK4 sub-steps than allowed."""
