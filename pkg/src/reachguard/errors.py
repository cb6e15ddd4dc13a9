"""Structured failures raised across the verification pipeline."""


class ReachguardError(Exception):
    """Base class for all structured errors of this package."""


class DomainExitError(ReachguardError):
    """An enclosure or trajectory left the model's declared validity domain."""


class BlowupError(ReachguardError):
    """The discrepancy radius exceeded the configured cap (runaway divergence)."""


class RefinementFloorError(ReachguardError):
    """A cover radius fell below the configured refinement floor."""


class UnboundedIntervalError(ReachguardError):
    """Interval evaluation produced a non-finite bound."""


class SimulationError(ReachguardError):
    """The numerical integrator failed (step rejection, non-finite state)."""


class ValidationError(ReachguardError):
    """A model violated one of its declared invariants."""


class ConfigError(ReachguardError):
    """A run configuration is syntactically or semantically invalid."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        if field is not None:
            message = f"{message} (field: {field})"
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
