"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A scenario or experiment configuration is malformed or inconsistent."""


class DomainError(ValueError):
    """A quantity was requested outside its domain (e.g. an undefined moment)."""


class EstimationError(ValueError):
    """An estimator was invoked with insufficient or unusable data."""


class InstabilityError(RuntimeError):
    """A simulation run exceeded the queued-work cap and looks unstable.

    Carries a short report so callers can show how far the run got.
    """

    def __init__(self, message: str, *, n_processed: int, queued: int, cap: int):
        super().__init__(message)
        self.n_processed = n_processed
        self.queued = queued
        self.cap = cap
