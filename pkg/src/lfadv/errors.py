"""Exception types shared across the toolkit."""


class LfadvError(Exception):
    """Base class for all toolkit errors."""


class ParseError(LfadvError):
    """A file could not be parsed (malformed record, bad JSON, ...)."""


class SchemaError(LfadvError):
    """A record was parseable but violates the expected schema."""


class ConfigError(LfadvError):
    """A configuration value is out of its legal range."""


class CheckpointError(LfadvError):
    """A checkpoint file is missing, truncated or from an unknown version."""


class NumericError(LfadvError):
    """A numeric contract was violated (non-finite values, bad shapes)."""
