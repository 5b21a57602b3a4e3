"""
Shared domain models.

Common Pydantic models used across multiple domains and the CLI.
"""

from typing import Any

from pydantic import BaseModel, Field


class ErrorResponse(BaseModel):
    """Machine-readable error document printed by `--format json`."""

    error: str = Field(..., description="Error message")
    status: str = Field(default="error", description="Status indicator")
    kind: str = Field(..., description="Exception class that caused the error")
    exit_code: int = Field(..., description="Process exit status")
    location: str | None = Field(
        None, description="<file>:<line> for scenario file errors"
    )
    details: dict[str, Any] | None = Field(None, description="Additional error details")

    @classmethod
    def from_exception(
        cls,
        error: Exception,
        exit_code: int,
        location: str | None = None,
        details: dict[str, Any] | None = None,
    ) -> "ErrorResponse":
        return cls(
            error=str(error),
            kind=type(error).__name__,
            exit_code=exit_code,
            location=location,
            details=details,
        )
