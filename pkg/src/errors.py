"""
Pipeline Errors
Exception types shared by every stage of the ICN forecasting pipeline.

Each error also derives from the closest builtin so callers that only know
about ``ValueError`` / ``RuntimeError`` / ``FileNotFoundError`` keep working.
"""

from typing import Sequence


class IcnfError(Exception):
    """Base class for all pipeline errors."""


class ShapeError(IcnfError, ValueError):
    """Operand shapes are incompatible for an operation."""

    def __init__(self, op: str, shapes: Sequence[tuple[int, ...]], detail: str = ""):
        self.op = op
        self.shapes = [tuple(s) for s in shapes]
        message = f"{op}: incompatible shapes {self.shapes}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class GraphError(IcnfError, RuntimeError):
    """Misuse of the autodiff graph (non-scalar loss, detached loss, double backward)."""


class DataValidationError(IcnfError, ValueError):
    """A record or cohort violates the dataset schema."""

    def __init__(self, message: str, subject_id: str | None = None):
        self.subject_id = subject_id
        if subject_id is not None:
            message = f"subject {subject_id}: {message}"
        super().__init__(message)


class CheckpointError(IcnfError, ValueError):
    """A checkpoint file is malformed or does not match the model."""


class MissingArtifactError(IcnfError, FileNotFoundError):
    """A prerequisite artifact is missing; names the subcommand that produces it."""

    def __init__(self, what: str, producer: str | None = None):
        self.what = what
        self.producer = producer
        message = f"missing {what}"
        if producer:
            message += f"; run `icnf {producer}` first"
        super().__init__(message)


class TrainingDivergedError(IcnfError, RuntimeError):
    """Loss became NaN or infinite during training."""

    def __init__(self, model: str, epoch: int, batch: int, loss: float):
        self.model = model
        self.epoch = epoch
        self.batch = batch
        self.loss = loss
        super().__init__(
            f"{model}: non-finite loss {loss!r} at epoch {epoch}, batch {batch}"
        )


class SplitError(IcnfError, ValueError):
    """A data split cannot satisfy its stratification preconditions."""


class ConfigError(IcnfError, ValueError):
    """Configuration file or values are invalid."""
