"""Exception hierarchy shared by all modules."""


class HAEError(Exception):
    """Base class for package errors."""


class ConfigurationError(HAEError, ValueError):
    """Invalid configuration or out-of-bound construction argument."""


class UsageError(HAEError, ValueError):
    """Invalid call: bad index, shape mismatch, unknown identifier."""


class DataError(HAEError, ValueError):
    """Malformed input data (unparseable cell, missing column)."""


class UnsupportedGateError(HAEError, TypeError):
    pass


class UndefinedCorrelationError(HAEError, ValueError):
    pass


class TrainingDivergedError(HAEError, RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")
