"""Exception types shared across the toolkit."""


class PcgError(Exception):
    """Base class for every error raised deliberately by pcgkit."""


class DataError(PcgError, ValueError):
    """Bad input data: malformed files, degenerate signals, label conflicts."""


class ConfigError(PcgError, ValueError):
    """Invalid configuration key or value."""
