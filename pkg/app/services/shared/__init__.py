"""
Shared domain models and utilities.

Common types and models used across multiple domains.
"""

from .models import ErrorResponse

__all__ = [
    "ErrorResponse",
]
