"""Simulation domain exceptions."""


class SimulationError(ValueError):
    """Base class for simulator errors."""


class ScenarioValidationError(SimulationError):
    """A scenario is inconsistent and cannot be run."""

    def __init__(self, message: str, parameter: str | None = None) -> None:
        super().__init__(message)
        self.parameter = parameter


class SimulationUsageError(SimulationError):
    """An operation was called on a trace it does not apply to."""
