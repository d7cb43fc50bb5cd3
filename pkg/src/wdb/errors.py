"""Exception types shared across the workbench.

Engine failures fall into three classes. ``UserError`` is the expected
class: malformed SQL, unknown tables, type mismatches. ``IoError`` comes
from the storage layer (real or simulated). ``InternalInvariantViolation``
means the engine tripped one of its own consistency assertions and is
only ever raised for engine defects.
"""

from __future__ import annotations


class EngineError(Exception):
    error_class = "EngineError"

    def __init__(self, message: str, kind: str = "internal"):
        super().__init__(message)
        self.message = message
        self.kind = kind

    def __str__(self) -> str:
        return f"{self.error_class}({self.kind}): {self.message}"


class UserError(EngineError):
    """Bad input from the user; ``kind`` names the error class."""

    error_class = "UserError"

    def __init__(self, message: str, kind: str = "syntax", offset: int | None = None):
        super().__init__(message, kind)
        self.offset = offset


class IoError(EngineError):
    error_class = "IoError"

    def __init__(self, message: str, kind: str = "io"):
        super().__init__(message, kind)


class InternalInvariantViolation(EngineError):
    error_class = "InternalInvariantViolation"

    def __init__(self, message: str, kind: str = "invariant"):
        super().__init__(message, kind)


class QueryInterrupted(Exception):
    """Raised when a statement exceeds its time budget or is interrupted."""


class ModelError(Exception):
    """The shadow model was handed an interaction it cannot apply.

    This always points at a generator (harness) defect, never at the engine.
    """


class ConfigError(Exception):
    pass


class NotReproducible(Exception):
    """A replay did not reproduce the recorded outcome."""
