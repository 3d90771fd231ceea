"""Exception hierarchy shared by every module."""


class SasError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(SasError, ValueError):
    """An argument violates an operation's precondition."""


class EmptySourceSet(InvalidInput):
    """A distance transform was requested with no source pixels."""


class EmptyWindow(InvalidInput):
    """An image has no nonzero pixel to crop to."""


class EmptyMask(InvalidInput):
    """A mask with no foreground pixel where one is required."""


class PredictorContractViolation(SasError):
    """A predictor returned something other than a mask of the reference shape."""
