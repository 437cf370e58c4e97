"""Exception hierarchy shared by every service.

Each error class carries the process exit code the CLI maps it to.
"""

from __future__ import annotations

from typing import Any


class DacdrError(Exception):
    """Base class for all domain errors."""

    exit_code: int = 1


class ShapeError(DacdrError, ValueError):
    """Operand shapes do not conform."""


class ArgumentError(DacdrError, ValueError):
    """An argument violates an operation's precondition."""


class EmbeddingIndexError(DacdrError, IndexError):
    """An id falls outside an embedding table or vocabulary."""

    exit_code = 3


class NonFiniteError(DacdrError, ArithmeticError):
    """A computation produced NaN or Inf."""


class StateError(DacdrError, RuntimeError):
    """An operation was called in the wrong lifecycle state."""


class ConfigError(DacdrError):
    exit_code = 2


class UsageError(DacdrError):
    exit_code = 2


class DataError(DacdrError):
    exit_code = 3


class IngestionError(DataError):
    """Input files could not be parsed under the declared schema."""

    def __init__(self, message: str, samples: list[str] | None = None) -> None:
        self.samples = samples or []
        if self.samples:
            message = message + "\n" + "\n".join(f"  {line}" for line in self.samples)
        super().__init__(message)


class ProtocolError(DataError):
    """The evaluation protocol cannot be applied to the given data."""


class TrainingError(DacdrError):
    exit_code = 4


class TrainingDivergedError(TrainingError):
    """Loss became non-finite; carries the report accumulated so far."""

    def __init__(self, message: str, report: Any | None = None) -> None:
        super().__init__(message)
        self.report = report


class MetricError(DacdrError, ValueError):
    """A metric is undefined for the given input."""

    exit_code = 3


class GradCheckFailure(DacdrError):
    exit_code = 5


__all__ = [
    "ArgumentError",
    "ConfigError",
    "DacdrError",
    "DataError",
    "EmbeddingIndexError",
    "GradCheckFailure",
    "IngestionError",
    "MetricError",
    "NonFiniteError",
    "ProtocolError",
    "ShapeError",
    "StateError",
    "TrainingDivergedError",
    "TrainingError",
    "UsageError",
]
