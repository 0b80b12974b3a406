"""Exception types shared across the package."""


class EtherstatError(Exception):
    """Base class for data-level errors (maps to CLI exit code 2)."""


class IngestError(EtherstatError):
    """Fatal parse problem: bad header, or too many malformed lines."""


class StatsError(EtherstatError):
    """A statistic is undefined or its preconditions are not met."""
