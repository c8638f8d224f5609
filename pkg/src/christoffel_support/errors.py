"""Exception types shared across the package."""


class ChristoffelError(Exception):
    """Base class for errors raised by christoffel_support."""


class DegenerateSampleError(ChristoffelError, ValueError):
    """Sample covariance is singular, so the sample cannot be whitened."""

    def __init__(self, message, null_direction=None):
        super().__init__(message)
        self.null_direction = null_direction


class SingularMomentMatrixError(ChristoffelError, ValueError):
    """Moment matrix is numerically singular and could not be factorized."""


class OutOfHypothesisError(ChristoffelError, ValueError):
    """A bound was evaluated outside the range where it is proven."""


class UnsupportedError(ChristoffelError, ValueError):
    """Requested case is deliberately not supported (e.g. non-integer r)."""


class ConstantOverflowError(ChristoffelError, OverflowError):
    """A scheme constant does not fit in a double."""


class ShapeTooThinError(ChristoffelError, RuntimeError):
    """Rejection sampler acceptance rate fell below the supported floor."""


class MemoryBudgetError(ChristoffelError, MemoryError):
    """Raster would exceed the configured cell budget."""


class UndefinedDistanceError(ChristoffelError, ValueError):
    """Set distance requested for an empty raster."""


class GridMismatchError(ChristoffelError, ValueError):
    """Two rasters do not share box and resolution."""


class CSVParseError(ChristoffelError, ValueError):
    """Malformed CSV input; message carries the offending line number."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class RankDeficientWarning(UserWarning):
    """Fewer samples than basis polynomials: the moment matrix is rank deficient."""
