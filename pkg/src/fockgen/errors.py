"""Exception types shared across the package."""


class FockgenError(Exception):
    """Base class for all package errors."""


class ValidationError(FockgenError):
    """Physically or structurally invalid inputs (bad parameters, failed
    consistency checks, rotating-wave limit exceeded, inadequate window)."""


class ConfigError(FockgenError):
    """Malformed or inconsistent run configuration."""


class PropagationError(FockgenError):
    """Numerical failure during time integration (step-size underflow,
    norm drift beyond the diagnostic bound)."""

    def __init__(self, message: str, t_failure: float | None = None):
        super().__init__(message)
        self.t_failure = t_failure
