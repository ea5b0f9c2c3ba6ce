"""Exception hierarchy shared by all ticbench modules."""


class TicbenchError(Exception):
    """Base class for all ticbench errors."""


class FormatError(TicbenchError):
    """Input file violates its declared format (header, magic, truncation)."""


class ParseError(TicbenchError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class RangeError(TicbenchError):
    """A value is outside its allowed range."""


class DuplicateRecordError(TicbenchError):
    """Two performance records share the same (model, dataset, task, window) key."""


class EmptySampleError(TicbenchError):
    """No series is long enough to yield a single window."""


class WindowTooShortError(TicbenchError):
    """Window context is below the minimum length for feature extraction."""


class NumericError(TicbenchError):
    """Non-finite values where finite ones are required."""


class InsufficientDataError(TicbenchError):
    """Too few rows for the requested statistic."""


class InsufficientSamplesError(TicbenchError):
    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer


class DegenerateEntropyError(TicbenchError):
    """Joint entropy of the full feature set is non-positive."""


class JoinError(TicbenchError):
    def __init__(self, message, offenders=None):
        super().__init__(message)
        self.offenders = offenders or []


class EmptyContextError(TicbenchError):
    """A context table ended up with zero rows."""


class EmptyPredictionError(TicbenchError):
    """Scoring was asked to aggregate an empty prediction list."""


class BackendError(TicbenchError):
    """Remote prediction backend failed (HTTP error, bad body, length mismatch)."""


class DegenerateScaleError(TicbenchError):
    """MASE denominator is zero (constant in-sample series)."""


class DegenerateLabelError(TicbenchError):
    """Labels have zero variance where variance is required."""


class SingularSystemError(TicbenchError):
    """Unregularized linear system is singular."""
