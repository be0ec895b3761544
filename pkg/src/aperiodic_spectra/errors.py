"""Exception hierarchy.

``ConfigurationError`` subclasses map to CLI exit code 2, ``ComputationError``
subclasses to exit code 1.
"""


class ConfigurationError(ValueError):
    """Invalid input or configuration."""


class SubstitutionError(ConfigurationError):
    pass


class UnsupportedError(ConfigurationError):
    """Request outside the supported sizes or configurations."""


class WindowError(ConfigurationError):
    """A query reaches outside the populated window of a point set or word."""


class ComputationError(RuntimeError):
    """A numerical procedure failed to deliver a trustworthy result."""


class ConvergenceError(ComputationError):
    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = estimates


class RefinementError(ComputationError):
    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval
