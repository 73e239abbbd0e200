"""Exception hierarchy shared by every qbvcheck module."""

from __future__ import annotations


class QbvError(Exception):
    """Base class for all errors raised by qbvcheck."""


class CircuitError(QbvError):
    """A circuit is malformed or its DSL text cannot be parsed.

    ``line`` and ``column`` are 1-based and only present for errors found
    while parsing text.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class PreconditionError(QbvError):
    """An evaluation was requested on inputs the semantics does not accept."""


class BindingError(QbvError):
    """A property cannot be bound to a circuit (role mismatch)."""


class MutationError(QbvError):
    """A fault descriptor does not apply to the given circuit."""


class SolverError(QbvError):
    """The external solver is missing or produced output we cannot interpret."""


class ModelParseError(SolverError):
    """The solver's model text is not a well-formed SMT-LIB model."""


class OracleCapExceeded(QbvError):
    """Exhaustive enumeration was refused because too many bits are free."""
