"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: InputError (and subclasses) exit 2,
NumericError exits 1.
"""


class CausalCalibError(Exception):
    """Base class for all toolkit errors."""


class InputError(CausalCalibError):
    """Invalid file contents, arguments, or data that violates a contract."""


class RankDeficientError(InputError):
    """Design matrix is rank deficient; carries the offending column index."""

    def __init__(self, message: str, column: int):
        super().__init__(message)
        self.column = column


class NumericError(CausalCalibError):
    """Non-finite values, failed convergence, or other numeric breakdown."""
