"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A configuration value or layer specification is invalid."""


class MismatchImpossible(ValueError):
    """Every characteristic row is identical, so no mismatched pair exists."""


class TrainingDiverged(RuntimeError):
    """A loss or gradient became non-finite during training."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class EnsembleError(RuntimeError):
    """Too few ensemble members finished training to select from."""


class ModelFormatError(ValueError):
    """A model file is corrupt or has an unsupported format version."""
