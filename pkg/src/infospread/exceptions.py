"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConvergenceError(RuntimeError):
    """An iterative method stopped without meeting its tolerance.

    ``last`` carries the final iterate for diagnosis.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class InstabilityError(RuntimeError):
    """A fixed-step integrator produced a state outside its admissible range."""


class NoOutbreakError(DomainError):
    """Requested a growth quantity below the spreading threshold."""
