"""Exception types raised by cgauss.

Every error derives from ``CGaussError`` (itself a ``ValueError``) so callers
can catch validation failures in one place. The CLI maps them to exit code 2.
"""


class CGaussError(ValueError):
    """Base class for all validation and numerical errors in cgauss."""


class NonPositiveEntry(CGaussError):
    """A diagonal-plus-constant parameter is zero, negative, NaN or infinite."""


class DimensionMismatch(CGaussError):
    pass


class ZeroWeight(CGaussError):
    """A constraint weight is zero, so the conditioning is degenerate."""

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"weight w[{index}] is zero; all weights must be nonzero")


class BadPivot(CGaussError):
    pass


class NotPositiveDefinite(CGaussError):
    pass


class DegenerateRescale(UserWarning):
    """Warning: the rescale scheme was asked for ``c = 0`` and returns only zeros."""


class TooFewAccepted(CGaussError):
    """The slice oracle accepted too few proposals to estimate moments."""


class InsufficientSamples(CGaussError):
    pass
