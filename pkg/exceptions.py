"""
PETE - Exceptions
-----------------
This module defines the error types raised across the library.
"""


class PeteError(Exception):
    """Base class for all library errors."""


class ShapeError(PeteError, ValueError):
    """Operand shapes are incompatible for an operation."""

    def __init__(self, op, shape_a, shape_b=None, detail=None):
        self.op = op
        self.shape_a = tuple(shape_a) if shape_a is not None else None
        self.shape_b = tuple(shape_b) if shape_b is not None else None
        message = f"{op}: incompatible shapes {self.shape_a}"
        if shape_b is not None:
            message += f" and {self.shape_b}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class NonFiniteError(PeteError, FloatingPointError):
    """An operation produced NaN or Inf."""

    def __init__(self, op, detail=None):
        self.op = op
        message = f"{op}: non-finite value"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class TapeError(PeteError, RuntimeError):
    """Misuse of the computation tape (empty, consumed, non-scalar loss)."""


class ConfigError(PeteError, ValueError):
    """Invalid configuration value or combination."""


class TokenIdError(PeteError, IndexError):
    """A token id lies outside [0, V-1]."""

    def __init__(self, token_id, vocab_size, position=None):
        self.token_id = token_id
        self.vocab_size = vocab_size
        self.position = position
        message = f"token id {token_id} out of range for vocab size {vocab_size}"
        if position is not None:
            message += f" at batch/sequence position {tuple(position)}"
        super().__init__(message)


class VocabError(PeteError, ValueError):
    """Vocabulary file is empty, has duplicates or lacks special tokens."""


class DataError(PeteError, ValueError):
    """Dataset could not be loaded or batched."""


class CheckpointError(PeteError, IOError):
    """Checkpoint is corrupt, truncated, versioned differently or mismatched."""


class TrainingError(PeteError, RuntimeError):
    """Training halted; the last good checkpoint is kept on disk."""

    def __init__(self, message, last_checkpoint=None):
        self.last_checkpoint = last_checkpoint
        if last_checkpoint:
            message += f" (last good checkpoint: {last_checkpoint})"
        super().__init__(message)


class EvaluationError(PeteError, ValueError):
    """Evaluation statistic is undefined for the given inputs."""


class BenchmarkError(PeteError, RuntimeError):
    """Benchmark variants disagree or the run parameters are invalid."""


class UsageError(PeteError):
    """Command-line usage error."""
