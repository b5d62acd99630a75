"""Exception hierarchy shared by the library and the CLI."""

from typing import Optional


class GraftError(Exception):
    """Base class for every error raised by this package."""

    code = "runtime_error"


class ShapeError(GraftError):
    """Raised when tensor extents do not line up."""

    code = "shape_error"


class ConfigurationError(GraftError, ValueError):
    """Raised when extents, windows or ratios are mutually inconsistent.

    Also a ValueError, so pydantic validators report it as a validation error.
    """

    code = "config_error"


class UsageError(GraftError):
    """Raised when an API is called outside its contract."""

    code = "usage_error"


class ConfigParseError(GraftError):
    """Raised when a run config file cannot be parsed."""

    code = "config_parse_error"

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class ConfigValidationError(GraftError):
    """Raised when a parsed config violates a model invariant."""

    code = "config_invalid"


class CheckpointCorruptionError(GraftError):
    """Raised when a checkpoint is truncated or fails its checksum."""

    code = "checkpoint_corrupt"


class CheckpointCompatibilityError(GraftError):
    """Raised when checkpoint tensors do not match the model's parameter names."""

    code = "checkpoint_incompatible"


class TrainingDivergedError(GraftError):
    """Raised when the training loss becomes non-finite."""

    code = "training_diverged"

    def __init__(self, step: int, loss: float):
        self.step = step
        self.loss = loss
        super().__init__(f"non-finite loss {loss} at step {step}")


class UnknownSuiteError(GraftError):
    """Raised for a verification suite name that does not exist."""

    code = "unknown_suite"
