"""Exception types shared across the package."""


class SwarmHerdError(Exception):
    """Base class for package-specific errors."""


class ConfigError(SwarmHerdError, ValueError):
    """Invalid configuration value or malformed config file."""


class InvalidRatesError(SwarmHerdError, ValueError):
    """Transition rates violate positivity or the per-vertex sum bound."""


class SimplexError(SwarmHerdError, ValueError):
    """A density vector is not on the probability simplex."""


class EmptySwarmError(SwarmHerdError, ValueError):
    """Operation requires at least one follower agent."""


class InvalidActionError(SwarmHerdError, ValueError):
    """Leader action not available at the current vertex."""


class EncodingError(SwarmHerdError, ValueError):
    """Discretized-state component out of range for the encoder."""


class CompatibilityError(SwarmHerdError, RuntimeError):
    """Q-table and environment shapes do not match."""


class QTableFormatError(CompatibilityError):
    """Malformed Q-table file (bad magic, version, or header)."""


class QTableDimensionError(QTableFormatError):
    """Q-table header fields are mutually inconsistent with the payload."""


class QTableTruncatedError(QTableFormatError):
    """Q-table payload is shorter than the header promises."""
