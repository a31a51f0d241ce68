"""Exception types shared across the toolkit."""


class DimensionMismatchError(ValueError):
    """An operator or projection received a vector of the wrong length."""


class ConstructionError(ValueError):
    """Invalid data passed to a constructor (bad indices, non-orthonormal rows, ...)."""


class PowerIterationError(RuntimeError):
    """Power iteration did not meet its tolerance within the iteration budget."""

    def __init__(self, message, last_estimate=None, last_vector=None):
        super().__init__(message)
        self.last_estimate = last_estimate
        self.last_vector = last_vector


class OracleUnavailableError(RuntimeError):
    """The dense solution-set oracle cannot run (ambient dimension above the cap)."""


class ScheduleError(ValueError):
    """Inadmissible or exhausted parameter sequence."""


class CertificationUnavailableError(RuntimeError):
    """A requested per-iteration certificate needs the solution-set oracle."""


class PreconditionError(ValueError):
    """An operation was called on a point that violates its stated precondition."""


class DetectionError(RuntimeError):
    """The cone/affine limit detection hypotheses were not met within the horizon."""
