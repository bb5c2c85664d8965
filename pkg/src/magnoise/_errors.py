"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented precondition or invariant."""


class KindMismatchError(TypeError):
    """A spectral density of the wrong kind was passed to a conversion."""


class NumericalError(ArithmeticError):
    """A numerical routine failed to converge.

    The best available estimate is kept on ``partial`` so callers can
    decide whether it is still usable.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
