"""Exception types shared across the package."""


class InputError(ValueError):
    """Raised when runtime data (arrays, files, shapes) violates a precondition."""


class ConfigError(ValueError):
    """Raised when a configuration value is out of range or inconsistent."""


class TrainingDiverged(RuntimeError):
    """Raised when the training loss becomes non-finite."""
