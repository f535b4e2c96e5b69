"""Exception hierarchy shared by all modules.

Validation failures (bad inputs, malformed data, misuse of an API) and
numeric failures (degenerate estimates, rank deficiency) are kept distinct
so the CLI can map them to different exit codes.
"""


class ThresholdRegretError(Exception):
    """Base class for all package errors."""


class ValidationError(ThresholdRegretError):
    """Input data or configuration violates a documented precondition."""


class NumericError(ThresholdRegretError):
    """A computation produced a degenerate or inconsistent numeric result."""


class RankDeficiencyError(NumericError):
    """Local regression design matrix is rank deficient near the evaluation point."""


class ArmDataError(NumericError):
    """Too few effective observations in one treatment arm for a local estimate."""


class DataWarning(UserWarning):
    """Non-fatal data quirk (duplicate index values, degenerate ordering)."""
