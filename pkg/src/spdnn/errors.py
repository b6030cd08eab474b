"""Exception types raised across the package."""


class SpdnnError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(SpdnnError):
    """Invalid architecture or configuration object."""


class ShapeError(SpdnnError):
    """Dimension mismatch between arrays, networks, or parameter vectors."""


class NumericError(SpdnnError):
    """Non-finite values where finite reals are required."""


class DivergenceError(SpdnnError):
    """Training or simulation produced non-finite values."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class StabilityError(SpdnnError):
    """Process parameters violate a hard stationarity requirement."""


class TuningError(SpdnnError):
    """Every cell of a tuning grid failed."""


class RegimeError(SpdnnError):
    """A tuning-schedule exponent constraint is violated."""


class BelowThresholdError(SpdnnError):
    """Sample size below the theoretical threshold; carries the thresholds."""

    def __init__(self, message, n=None, thresholds=None, failing=None):
        super().__init__(message)
        self.n = n
        self.thresholds = thresholds or {}
        self.failing = failing or []


class RootBracketError(SpdnnError):
    """Root finder could not bracket a sign change."""


class IngestionError(SpdnnError):
    """Unreadable or malformed input file; carries the offending row."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class InsufficientDataError(SpdnnError):
    """Dataset too short for the requested split."""


class RelativeMetricError(SpdnnError):
    """Relative prediction error undefined (non-positive actuals).

    The absolute metric is still computed and carried on the exception.
    """

    def __init__(self, message, mean_abs=None):
        super().__init__(message)
        self.mean_abs = mean_abs
