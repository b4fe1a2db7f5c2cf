"""Exception hierarchy shared across the toolkit."""


class WinenoseError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(WinenoseError):
    """Invalid configuration values."""


class ParseError(WinenoseError):
    """A file on disk could not be parsed."""


class IntegrityError(WinenoseError):
    """Manifest and on-disk data disagree."""


class ProtocolError(WinenoseError):
    """An evaluation protocol cannot be built (e.g. too few groups)."""


class TrainingError(WinenoseError):
    """Model training received unusable input or diverged."""


class InputError(WinenoseError):
    """Bad runtime input (dimension mismatch, non-finite values, ...)."""
