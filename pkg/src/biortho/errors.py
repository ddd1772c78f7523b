"""Exception types raised by :mod:`biortho`."""


class BiorthoError(Exception):
    """Base class for all library errors."""


class BasisMismatchError(BiorthoError, ValueError):
    """Two test functions live on different Hermite bases."""


class NonFiniteSampleError(BiorthoError, ValueError):
    """A sampler or kernel returned NaN/inf at a quadrature node."""


class UnsupportedDistributionError(BiorthoError, TypeError):
    """An operation is not defined for the given distribution variant(s)."""


class ConstructionError(BiorthoError, ValueError):
    """A map or deformed pair failed its construction invariants."""


class SpillError(BiorthoError, ArithmeticError):
    """An unbounded operation pushed too much mass past the truncation."""

    def __init__(self, message, spill):
        super().__init__(message)
        self.spill = spill


class BoundaryLeakageError(BiorthoError, ValueError):
    """A function is not negligible at the edge of the convolution grid."""
