"""Exception types shared across modules."""


class ConvergenceError(RuntimeError):
    """A numerical procedure did not reach its requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class QuadratureError(ConvergenceError):
    """Adaptive quadrature returned a warning flag."""


class DimensionError(ValueError):
    """Requested Hilbert space exceeds the configured cap."""
