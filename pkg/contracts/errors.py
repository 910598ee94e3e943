"""Exception hierarchy shared by every depthkit module.

The CLI maps these onto exit codes; library code only raises.
"""

from __future__ import annotations


class DepthkitError(Exception):
    """Base class for all depthkit errors."""

    exit_code: int = 1


class ConfigError(DepthkitError):
    """Malformed or out-of-range experiment configuration."""

    exit_code = 2

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(DepthkitError):
    """A data file does not match its declared schema."""

    exit_code = 3

    def __init__(self, message: str, column: str | None = None) -> None:
        self.column = column
        super().__init__(message)


class NumericError(DepthkitError):
    """A numerical routine produced a non-finite or unusable result."""

    exit_code = 4


class ContractViolation(DepthkitError, ValueError):
    """A caller broke an operation's precondition (e.g. out-of-bounds site)."""


class InvalidInputError(DepthkitError, ValueError):
    """Input data is empty, mismatched or otherwise unusable."""


class InvalidBudgetError(InvalidInputError):
    """A sampling request does not fit inside the volume."""
