"""Exception types shared across the package."""


class OrdvarError(Exception):
    """Base class for all package errors."""


class DomainError(OrdvarError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class BracketError(OrdvarError):
    """A root could not be bracketed."""


class ConvergenceError(OrdvarError):
    """An iterative procedure hit its iteration cap.

    ``estimate`` and ``error`` carry the best result reached so far.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
