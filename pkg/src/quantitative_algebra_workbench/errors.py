"""Exceptions raised by the workbench."""

from typing import Any


class WorkbenchError(Exception):
    """Base class for every error the workbench raises on purpose."""


class InputError(WorkbenchError, ValueError):
    """Malformed input: unknown labels, invalid spaces, maps or tables."""


class ParseError(InputError):
    """A lexical, syntax or resolution diagnostic with its source position."""

    def __init__(self, message: str, line: int, column: int, expected: set[str] | None = None):
        self.message = message
        self.line = line
        self.column = column
        self.expected = sorted(expected or ())
        location = f"{line}:{column}"
        if self.expected:
            super().__init__(f"{location}: {message} (expected one of: {', '.join(self.expected)})")
        else:
            super().__init__(f"{location}: {message}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "message": self.message,
            "line": self.line,
            "column": self.column,
            "expected": self.expected,
        }


class BudgetExceeded(WorkbenchError, RuntimeError):
    """A configured enumeration cap was hit."""


class EvaluationError(WorkbenchError):
    """An operation is undefined on its arguments."""

    def __init__(self, message: str, term: Any = None):
        super().__init__(message)
        self.term = term


class ConvergenceError(WorkbenchError, RuntimeError):
    """A fixed-point computation exceeded its pass limit."""
