"""Scenario file exceptions."""


class ScenarioError(ValueError):
    """
    A scenario file could not be parsed or validated.

    `line` is 1-based; None when the problem has no single location, such
    as a missing required key. `parameter` names the offending key when one
    is known.
    """

    def __init__(
        self, message: str, line: int | None = None, parameter: str | None = None
    ) -> None:
        super().__init__(message)
        self.message = message
        self.line = line
        self.parameter = parameter

    def render(self, source: str) -> str:
        if self.line is None:
            return f"{source}: {self.message}"
        return f"{source}:{self.line}: {self.message}"
