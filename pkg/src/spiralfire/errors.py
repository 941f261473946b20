"""Exception types shared across the package."""


class SpiralFireError(Exception):
    """Base class for all errors raised by spiralfire."""


class InvalidParameterError(SpiralFireError, ValueError):
    """An input violates a documented precondition."""


class NumericalError(SpiralFireError, ArithmeticError):
    """A computation left the range where double precision is meaningful."""


class ParameterOverflowError(NumericalError):
    """Closed-form parameters overflow (speed too close to 1)."""


class PrecisionOverflowError(NumericalError):
    """Series coefficients outgrew the double range.

    ``last_valid_j`` is the largest index computed before the overflow and
    ``partial`` holds whatever was computed up to that point.
    """

    def __init__(self, message, last_valid_j=-1, partial=None):
        super().__init__(message)
        self.last_valid_j = last_valid_j
        self.partial = partial


class NoComplexDominantPairError(SpiralFireError):
    """``e^{wZ} - sZ`` has real dominant zeros (speed at or below critical)."""

    def __init__(self, message, real_roots=()):
        super().__init__(message)
        self.real_roots = tuple(real_roots)


class StepTooCoarseError(NumericalError):
    """The arc-length step cannot resolve the wrapping of the free string."""


class TangentConstructionError(SpiralFireError):
    """A backward tangent failed to land on the inner coil."""


class MalformedScheduleError(InvalidParameterError):
    """A spiralling schedule is inconsistent or infeasible."""
