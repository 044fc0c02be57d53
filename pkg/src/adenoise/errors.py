"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    """An argument violates a documented precondition."""


class ConfigError(ValueError):
    """An estimator or experiment configuration is incomplete or inconsistent."""


class DivergedError(RuntimeError):
    """An iterative solver produced non-finite values or failed to stabilize."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration
