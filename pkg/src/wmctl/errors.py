"""Exception types shared across the toolkit."""


class WmctlError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(WmctlError):
    """Image dimensions are unusable (mismatch, too small, or not block-aligned)."""


class CapacityError(WmctlError):
    """Requested payload/redundancy does not fit into the image's coefficient budget."""


class ConfigError(WmctlError):
    """A configuration value is out of range or inconsistent."""


class ParseError(WmctlError):
    """A structured text file (pixmap, manifest, config, report) is malformed."""


class CalibrationError(WmctlError):
    """Too few clean samples to calibrate the null bias."""
