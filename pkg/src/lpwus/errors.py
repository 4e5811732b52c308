"""Exception types shared across the package."""


class LpwusError(Exception):
    """Base class for all library errors."""


class ConfigError(LpwusError):
    """A configuration file or value violates the documented schema."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class MoSkippedError(LpwusError):
    """The addressed monitoring occasion was dropped (not enough symbols)."""
