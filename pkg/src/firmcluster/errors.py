class InvalidParameterError(ValueError):
    """A model or experiment parameter is outside its valid range."""


class DimensionError(ValueError):
    """Genome or array shapes do not match the landscape."""


class StateError(RuntimeError):
    """Operation not allowed in the current simulation state."""


class ConfigError(ValueError):
    """Configuration file missing, malformed, or failing validation."""
