"""Exception types shared across the package."""


class CosmosLabError(Exception):
    """Base class for all package errors."""


class PreconditionError(CosmosLabError, ValueError):
    """An input violates a documented precondition of a kernel."""


class ShapeError(CosmosLabError, ValueError):
    """Array shapes are incompatible."""


class DomainError(CosmosLabError, ValueError):
    """The operation is undefined for the given input (e.g. sign of a zero matrix)."""


class ConfigError(CosmosLabError, ValueError):
    """Invalid configuration. ``path`` names the offending key when known."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class DivergenceError(CosmosLabError, RuntimeError):
    """Training produced a non-finite loss."""
