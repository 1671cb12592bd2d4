"""Shared exception types."""


class InvalidInputError(ValueError):
    """Raised when an operation receives malformed data (bad shape, non-finite values, ...)."""


class DegenerateBatchError(InvalidInputError):
    """Raised when a batch cannot support the requested style mixing (single domain)."""


class InvalidConfigError(ValueError):
    """Raised when a configuration value is out of its documented range."""


class TrainingDivergenceError(RuntimeError):
    """Raised when a loss becomes non-finite during training."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite loss at step {step}")
