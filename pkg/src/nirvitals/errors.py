"""Exception hierarchy shared by every module.

The CLI maps each family onto a distinct exit code, so new error types
should subclass one of the three families below.
"""


class VitalsError(Exception):
    """Base class for all package errors."""


class ContainerIOError(VitalsError, OSError):
    """A file or container could not be read or written."""


class MissingFileError(ContainerIOError, FileNotFoundError):
    pass


class CorruptContainerError(ContainerIOError):
    pass


class ValidationError(VitalsError, ValueError):
    """Input violates a documented precondition or type invariant."""


class DimensionMismatchError(ValidationError):
    pass


class TimestampOrderError(ValidationError):
    pass


class BoundsError(ValidationError):
    pass


class NumericalError(VitalsError, ArithmeticError):
    """A computation hit a degenerate numeric case (zero variance, rank loss)."""
