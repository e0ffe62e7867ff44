"""Signalized-corridor progression analytics from sparse connected-vehicle waypoints."""

__version__ = "0.1.0"


class CorridorError(ValueError):
    """Invalid corridor definition or configuration."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class DegenerateInputError(ValueError):
    """Input too small or too flat for a metric to be defined."""


class SchemaError(ValueError):
    """Waypoint stream with an unexpected header or unreadable content."""


class SynthError(ValueError):
    """Synthetic scenario that cannot be generated."""
