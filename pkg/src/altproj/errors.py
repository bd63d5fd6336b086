"""Exception types shared across the package."""


class AltprojError(Exception):
    """Base class for all library-specific errors."""


class ParseError(AltprojError, ValueError):
    """Malformed polynomial text or configuration file."""


class ZeroSeriesError(AltprojError, ValueError):
    """A series that is zero through its truncation order where a nonzero
    lowest term is required (degenerate scenario)."""


class NotConvenientError(AltprojError, ValueError):
    """Newton boundary does not meet every coordinate axis."""


class DegenerateInputError(AltprojError, ValueError):
    """Input violates a structural precondition (identical surfaces,
    dependent gradients, line inside the zero set, ...)."""


class ScenarioError(AltprojError, ValueError):
    """Scenario construction failed an assertion spot check or invariant."""


class InsufficientDataError(AltprojError, ValueError):
    """Not enough usable trace records for the requested estimate."""


class SolverFailure(AltprojError, RuntimeError):
    """A Newton solve did not converge within its iteration budget."""

    def __init__(self, message, residual=None, step=None):
        super().__init__(message)
        self.residual = residual
        self.step = step
