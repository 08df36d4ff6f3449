"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Raised when a configuration file or object cannot be used."""


class EmptyTraceError(ValueError):
    """Raised when an operation needs a populated trace and got none."""


class SolverError(RuntimeError):
    """Base class for failures inside the time stepper.

    Carries the simulation time at which the failure occurred in ``t``.
    """

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message if t is None else f"{message} (at t={t:.9g} s)")
        self.t = t


class StabilityViolation(SolverError):
    """Interface position fell below the minimum-thickness floor."""


class NonFiniteState(SolverError):
    """A state sample became NaN or infinite."""


class NonMonotoneTime(ValueError):
    """Controller was invoked with a time earlier than its last event."""
