"""Exception types shared across the package.

Each class doubles as a machine-parsable error category for the CLI
(exit code 1 + category string on stderr).
"""


class DgsdError(Exception):
    """Base class; `category` feeds the CLI error report."""

    category = "runtime"


class WindowError(DgsdError):
    """Recording too short for the requested window, or bad window/hop."""

    category = "window"


class BandError(DgsdError):
    """Frequency band invalid against the sampling rate."""

    category = "band"


class DimensionError(DgsdError):
    """Shape mismatch between operands."""

    category = "dimension"


class NumericError(DgsdError):
    """Non-finite values or degenerate spectra."""

    category = "numeric"


class DataFormatError(DgsdError):
    """Container file unreadable: bad magic, version, offsets, truncation."""

    category = "data-format"


class SplitError(DgsdError):
    """Dataset too small to split at the requested ratios."""

    category = "split"


class ConfigError(DgsdError):
    """Invalid or unknown configuration values."""

    category = "config"
