class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ConvergenceError(RuntimeError):
    """A numerical procedure failed to reach its stated tolerance."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
