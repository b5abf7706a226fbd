"""Exception types raised across the package."""


class InflapError(Exception):
    """Base class for all package errors."""


class InvalidInputError(InflapError, ValueError):
    """Non-finite coordinates or malformed inputs."""


class DomainError(InflapError, ValueError):
    """A point lies outside the region where an operation is defined."""


class ConfigurationError(InflapError, ValueError):
    """Parameters violate a precondition (resolution, epsilon range, ...)."""


class UnsupportedError(InflapError, ValueError):
    """The request is well formed but not supported (e.g. non-convex masks)."""


class InsufficientDataError(InflapError, ValueError):
    """Too few usable samples to produce an estimate."""


class InvalidStartError(InflapError, ValueError):
    """Gradient-flow start point is outside the domain or degenerate."""
