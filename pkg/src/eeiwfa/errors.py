"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance.

    Carries the last observed gap so callers can log or relax.
    """

    def __init__(self, message, delta=None):
        super().__init__(message)
        self.delta = delta


class CheckFailure(RuntimeError):
    """A numeric criterion or bound check failed (maps to CLI exit 2)."""
