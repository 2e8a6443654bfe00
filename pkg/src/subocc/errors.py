"""Exception hierarchy.

The CLI maps these onto exit codes: ``UsageError`` -> 1, ``DataError`` -> 2,
``NumericalError`` -> 3.
"""


class OccError(Exception):
    """Base class for all package errors."""


class UsageError(OccError, ValueError):
    """Bad configuration, unknown option or unparseable model string."""


class DataError(OccError, ValueError):
    """Malformed or inconsistent input data."""


class NumericalError(OccError, ArithmeticError):
    """A numerical routine failed (non-finite values, degenerate matrices)."""


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
