"""Exception hierarchy shared by the solver modules."""


class JPSError(Exception):
    """Base class for all solver errors."""

    exit_code = 5


class ConfigError(JPSError, ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    exit_code = 2

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class RangeViolation(JPSError):
    pass


class NonPositiveSpeed(JPSError):
    pass


class GridMismatch(JPSError, ValueError):
    pass


class MeshMismatch(JPSError, ValueError):
    pass


class SolveDiverged(JPSError):
    pass


class CoefficientFloorViolated(JPSError):
    exit_code = 3


class NonFiniteState(JPSError, FloatingPointError):
    pass


class NegativeWeight(JPSError, ValueError):
    pass


class NegativeA(JPSError, ValueError):
    pass


class SmallDataViolation(JPSError, ValueError):
    """Initial data exceed the small-ball radius eta0."""

    exit_code = 2


class NoContraction(JPSError):
    exit_code = 4


class DegeneracyLost(JPSError):
    exit_code = 3


class MaxIterExceeded(JPSError):
    exit_code = 4


class RangeWarning(UserWarning):
    """Temperature shift left the certified range (floors still hold)."""
