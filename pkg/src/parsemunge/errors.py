"""Exception types shared across the package."""


class ParsemungeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ParsemungeError):
    """Invalid configuration: unknown categories, bad overrides, bad parameters."""


class DataError(ParsemungeError):
    """Invalid data: malformed CSV, missing columns, unusable column contents."""
