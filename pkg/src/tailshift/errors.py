"""Exception hierarchy shared across the package."""


class TailShiftError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(TailShiftError, ValueError):
    """Input violates a documented precondition (bad probability, short series, ...)."""


class DegenerateStatisticError(TailShiftError):
    """A statistic could not be formed because its normalizer is identically zero.

    Carries ``value``, the center or point estimate that was still computable,
    so callers can report it instead of silently dropping the case.
    """

    def __init__(self, message: str, value: float | None = None):
        super().__init__(message)
        self.value = value


class DegenerateIntervalError(DegenerateStatisticError):
    """Zero-dispersion confidence interval; ``value`` holds the interval center."""


class MissingTableError(TailShiftError, LookupError):
    """No cached critical-value table matches the requested key."""


class TableMismatchError(TailShiftError):
    """A supplied critical-value table was built for different parameters."""
