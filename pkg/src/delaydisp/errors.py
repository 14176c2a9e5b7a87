"""Exception hierarchy shared by the solver modules."""


class DelayDispError(Exception):
    """Base class for all package errors."""


class ConfigurationError(DelayDispError, ValueError):
    """Invalid grid, step size, preset or config file."""


class HypothesisViolation(DelayDispError, ValueError):
    """A stability-theorem hypothesis does not hold for the given inputs."""


class SequencingError(DelayDispError, RuntimeError):
    """A state was pushed out of order into a history buffer."""


class CoverageError(DelayDispError, LookupError):
    """A delayed value was requested outside the stored window."""


class NumericalBreakdown(DelayDispError, RuntimeError):
    """The banded step system could not be solved."""


class DecayFitError(DelayDispError, ValueError):
    """A decay fit window contains a non-positive norm value."""

    def __init__(self, message: str, t_bad: float):
        super().__init__(message)
        self.t_bad = t_bad
