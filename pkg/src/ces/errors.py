"""Exception hierarchy shared by all modules."""


class CesError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(CesError):
    """An operand has a Hilbert-space dimension the operation cannot handle."""


class ValidationError(CesError):
    """An input failed a physicality check (Hermiticity, trace, positivity)."""


class DataError(CesError):
    """Count or series data is empty, degenerate, or otherwise unusable."""


class ConfigError(CesError):
    """A configuration file or value is missing, malformed, or out of range."""
