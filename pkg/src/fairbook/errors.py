"""Exception types shared across the pipeline."""


class FairbookError(Exception):
    """Base class for all domain errors raised by this package."""


class IngestError(FairbookError):
    """Fatal problem while parsing or preprocessing the raw ratings data."""


class ConfigError(FairbookError):
    """Run configuration file is missing, malformed or inconsistent."""


class FitError(FairbookError):
    """A recommender failed to train (divergence, singular solve, ...)."""


class ValidationError(FairbookError):
    """An externally supplied recommendations file violates its contract."""


class UndefinedCorrelationError(FairbookError):
    """Pearson correlation requested for a constant series."""
