"""Exception hierarchy shared across the toolkit."""


class LinkCdrError(Exception):
    """Base class for all toolkit errors."""


class ParseError(LinkCdrError):
    """Fatal input-format problem (unreadable stream, bad header)."""


class ConfigError(LinkCdrError):
    """Invalid configuration value or flag combination."""


class DatasetError(LinkCdrError):
    """Data fails a precondition (empty inputs, missing pair, class too small)."""
