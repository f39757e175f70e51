"""Exception types shared across the package."""


class MBoEError(Exception):
    """Base class for all package-specific errors."""


class IngestionError(MBoEError):
    """A record stream or tabular input file is malformed."""


class FormatError(MBoEError):
    """A persisted binary artifact is corrupt, truncated, or incompatible."""


class ConfigurationError(MBoEError):
    """Inconsistent dimensions, languages, modes, or flag combinations."""


class UnknownMentionError(MBoEError, KeyError):
    """Commonness was requested for a mention absent from the dictionary."""


class MissingGoldEntitiesError(MBoEError):
    """A document without gold entity annotations was passed to the gold
    ingestion path; use automatic detection instead."""
