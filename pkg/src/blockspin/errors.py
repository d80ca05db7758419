"""Exception types shared across the package."""


class ResourceLimitError(RuntimeError):
    """Raised when a request would exceed a hard size cap (e.g. 2**n enumeration)."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""
