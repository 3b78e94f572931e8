class InputError(ValueError):
    """Invalid problem data or parameters passed to a library function."""


class ConfigError(ValueError):
    """Invalid experiment configuration (unknown preset, policy, ...)."""
