"""Exception hierarchy.

The CLI maps these to exit codes: usage problems exit 1, data problems
exit 2, numerical failures exit 3.
"""


class AxcircError(Exception):
    """Base class for all package errors."""


class DomainError(AxcircError, ValueError):
    """A value lies outside its documented domain."""


class DegenerateInputError(DomainError):
    """Input is formally valid but carries no information (e.g. all-zero weights)."""


class UsageError(AxcircError):
    """Bad command-line or configuration input."""


class DataError(AxcircError):
    """Input data cannot be read or parsed."""


class NumericalError(AxcircError):
    """A numerical routine failed to produce a usable result."""


class FitFailureError(NumericalError):
    """Every attempted fit initialization collapsed or diverged."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
