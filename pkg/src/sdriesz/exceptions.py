"""Exception types raised by the numerical routines."""


class SdrieszError(Exception):
    """Base class for all package errors."""


class SpectrumTooClose(SdrieszError):
    """A resolvent was requested too close to a spectral point.

    Attributes
    ----------
    index : int or None
        Zero-based mode index of the offending eigenvalue, ``None`` for the
        tail cluster point.
    distance : float
        Distance between the evaluation point and the spectral point.
    """

    def __init__(self, index, distance, point=None):
        self.index = index
        self.distance = float(distance)
        self.point = point
        where = "tail cluster point" if index is None else f"mode {index}"
        super().__init__(
            f"evaluation point {point!r} is within {self.distance:.3e} of the "
            f"spectrum ({where})"
        )


class SmwSingular(SdrieszError):
    """The Sherman-Morrison denominator ``1 - F R(z,T) S`` is numerically zero."""

    def __init__(self, value, point=None):
        self.value = complex(value)
        self.point = point
        super().__init__(
            f"rank-one resolvent denominator |{self.value:.3e}| below tolerance "
            f"at z={point!r}; z is (numerically) in the spectrum"
        )


class NegativeMargin(SdrieszError):
    """A lower-bound scan produced a non-positive certified margin.

    The partially computed :class:`~sdriesz.transfer.LowerBoundResult` is kept
    on ``result`` so callers can report it.
    """

    def __init__(self, message, result=None):
        self.result = result
        super().__init__(message)


class NoAdmissibleTau(SdrieszError):
    """Even the smallest sampling period on the grid failed the acceptance test."""

    def __init__(self, message, table=None):
        self.table = table
        super().__init__(message)


class PlacementError(SdrieszError):
    """Pole placement preconditions failed or the placed matrix missed its targets."""


class DescriptionError(SdrieszError):
    """Invalid system-description file; ``field`` names the offending key path."""

    def __init__(self, message, field=None):
        self.field = field
        prefix = f"{field}: " if field else ""
        super().__init__(prefix + message)


class NotStabilized(SdrieszError):
    """The closed-loop truncation has an eigenvalue in the closed right half-plane."""


class AmbiguousSplit(SdrieszError):
    """An eigenvalue is too close to the imaginary axis to assign to either part."""
