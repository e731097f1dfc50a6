"""Exception hierarchy shared across the package.

Error vocabulary:
  ConfigurationError -- bad parameters, bad flag combinations, missing arguments
  ShapeError         -- array/tensor dimension mismatches
  DataError          -- malformed or missing on-disk data
  TrainingError      -- diverged training run; carries the last good state
  DependencyError    -- a pipeline stage invoked before its prerequisites exist
  NumericalError     -- non-finite values in a numerical routine
"""


class ZSLDBError(Exception):
    pass


class ConfigurationError(ZSLDBError):
    pass


class ShapeError(ZSLDBError):
    pass


class DataError(ZSLDBError):
    pass


class TrainingError(ZSLDBError):
    """Raised when a training loop diverges (NaN/inf loss).

    ``last_good`` holds the most recent finite-loss state dict so the caller
    can keep a usable checkpoint.
    """

    def __init__(self, message, last_good=None, step=None):
        super().__init__(message)
        self.last_good = last_good
        self.step = step


class DependencyError(ZSLDBError):
    pass


class NumericalError(ZSLDBError):
    """Non-finite value in a numerical routine; ``breakdown`` names the terms."""

    def __init__(self, message, breakdown=None):
        super().__init__(message)
        self.breakdown = breakdown or {}
