"""Exception taxonomy for trialign.

Every error raised by the public API derives from TrialignError so callers
can catch library failures without touching unrelated exceptions.
"""


class TrialignError(Exception):
    """Base class for all trialign errors."""


class ShapeError(TrialignError, ValueError):
    """Operand shapes are incompatible. The message names both shapes."""


class EmptyInputError(TrialignError, ValueError):
    """An operation received an empty matrix or batch."""


class ParameterError(TrialignError, ValueError):
    """A scalar parameter is out of its valid range (e.g. tau <= 0)."""


class NonFiniteError(TrialignError, FloatingPointError):
    """A public operation produced NaN or Inf entries."""


class RegimeMismatchError(TrialignError, ValueError):
    """Batch or dataset content is incompatible with the training regime."""


class DatasetFormatError(TrialignError, ValueError):
    """A dataset file failed validation. Carries file and location info."""

    def __init__(self, message: str, *, path: str = "", line: int | None = None,
                 offset: int | None = None):
        loc = path
        if line is not None:
            loc += f":line {line}"
        if offset is not None:
            loc += f":byte {offset}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line
        self.offset = offset


class CheckpointFormatError(TrialignError, ValueError):
    """A checkpoint file has a bad magic, version, or layout."""


class DivergenceError(TrialignError, RuntimeError):
    """Training produced a non-finite loss or gradient."""


class MappingError(TrialignError, ValueError):
    """A retrieval ground-truth entry does not resolve to a database item."""
