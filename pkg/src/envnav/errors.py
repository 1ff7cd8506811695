"""Exception types shared across the package."""


class EnvNavError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it."""

    exit_code = 1


class ValidationError(EnvNavError, ValueError):
    exit_code = 3


class InvalidParams(ValidationError):
    pass


class InvalidPath(ValidationError):
    pass


class DegenerateTarget(ValidationError):
    pass


class EmptyTrajectory(ValidationError):
    pass


class WorldPathMismatch(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class EmptyBatch(ValidationError):
    pass


class EmptyTraces(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class MissingFile(ValidationError):
    pass


class MissingCheckpoint(MissingFile):
    pass


class NotRunning(EnvNavError, RuntimeError):
    pass
