"""Hybrid classical-quantum autoencoder for latent-space anomaly detection."""

from hae.errors import (
    ConfigurationError,
    DataError,
    TrainingDivergedError,
    UndefinedCorrelationError,
    UnsupportedGateError,
    UsageError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DataError",
    "TrainingDivergedError",
    "UndefinedCorrelationError",
    "UnsupportedGateError",
    "UsageError",
    "__version__",
]
