"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: usage problems are raised by the
argument parser itself, ``DataError`` means the input data is unusable,
``ModelFormatError`` means a model file cannot be trusted, and anything
else is an internal failure.
"""


class AgmError(Exception):
    """Base class for all package-specific errors."""


class DataError(AgmError):
    """Raised when input data (CSV, dataset, split request) is invalid."""


class ConfigError(AgmError):
    """Raised when a configuration object violates its invariants."""


class ModelFormatError(AgmError):
    """Base class for model (de)serialization failures."""


class CorruptModelError(ModelFormatError):
    """Model file is truncated, malformed, or fails invariant checks."""


class UnsupportedVersionError(ModelFormatError):
    """Model file declares a format version this build cannot read."""
