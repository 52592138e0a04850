"""Exception hierarchy shared by every trustflow module.

The CLI maps :class:`DomainError` and :class:`ConvergenceError` to exit
code 1 and :class:`InputError` (and its subclasses) to exit code 2.
"""


class TrustflowError(Exception):
    """Base class for all package errors."""


class DomainError(TrustflowError, ValueError):
    """A numeric argument lies outside the domain of an operation."""


class UndefinedTrustError(DomainError):
    """MAP trust requested with neither prior pseudo-counts nor observations."""


class ConvergenceError(TrustflowError):
    """An iterative procedure hit its iteration limit.

    Attributes
    ----------
    residual : float
        Largest per-entry change (or constraint violation) at the last
        iteration.
    iterations : int
        Number of iterations performed.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InputError(TrustflowError):
    """Malformed user input (files, flags, configuration)."""


class FormatError(InputError, ValueError):
    """A data file violates its line format."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(InputError, ValueError):
    """A scenario configuration violates its invariants."""


class IngestError(InputError):
    """Interaction data is inconsistent (e.g. missing contact counts)."""
