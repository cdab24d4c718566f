class DimensionError(ValueError):
    pass


class NonErgodicError(ValueError):
    """The chain has no unique stationary distribution we can solve for."""


class CapExceededError(ValueError):
    """A state space or enumeration would exceed the configured size cap."""


class DegeneratePointError(FloatingPointError):
    """Both mixture component densities underflowed at a data point."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap.

    ``partial`` holds whatever the solver had at the time it stopped.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class DegeneracyWarning(RuntimeWarning):
    pass


class ComplexSpectrumWarning(RuntimeWarning):
    pass
