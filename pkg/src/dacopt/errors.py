"""Exception types shared across the package."""


class DacoptError(Exception):
    """Base class for every error raised by this package."""


class OverlapOrGapError(DacoptError):
    """Partial solutions being composed do not partition the index set."""


class IndexOutOfRangeError(DacoptError, IndexError):
    """A projection index falls outside the solution's dimension range."""


class BudgetExhaustedError(DacoptError):
    """A fresh evaluation was requested with no budget left.

    Optimization runs treat this as the normal stop signal, not a failure.
    """


class NonFiniteValueError(DacoptError):
    """An objective produced or received a NaN (or otherwise unusable) value."""


class DimensionMismatchError(DacoptError):
    """An input vector's length does not match the expected dimension."""


class DimensionTooSmallError(DacoptError):
    """The objective needs more coordinates than the input provides."""


class IncompatibleDimensionsError(DacoptError):
    """Benchmark dimension and group size cannot form the required blocks."""


class InvalidGroupCountError(DacoptError):
    """Requested number of groups is not in [1, dimension]."""


class GridTooLargeError(DacoptError):
    """An exhaustive grid search would exceed its configured size cap."""


class OutOfRangeProbabilityError(DacoptError):
    """A probability outside [0, 1] was supplied."""


class NonPositiveValuesError(DacoptError):
    """A log-domain fit window contains no usable positive values."""


class ProtocolError(DacoptError):
    """An external worker sent a reply that violates the line protocol."""


class WorkerTimeoutError(DacoptError):
    """An external worker did not reply within the allowed time."""


class WorkerCrashedError(DacoptError):
    """An external worker exited or closed its pipes mid-session."""


class UsageError(DacoptError):
    """Bad command-line arguments or configuration file contents."""
