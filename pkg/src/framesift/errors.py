"""Exception hierarchy for framesift.

Every data-dependent failure raises a subclass of :class:`FramesiftError`,
so callers (notably the CLI) can distinguish bad data (exit 1) from bad
usage (exit 2) with a single except clause.
"""


class FramesiftError(Exception):
    """Base class for all framesift errors."""


class NonFiniteError(FramesiftError):
    """A vector or matrix contains NaN or Inf entries."""


class ZeroNormError(FramesiftError):
    """A vector with (near-)zero L2 norm cannot be normalized."""


class DimMismatchError(FramesiftError):
    """Embedding dimensions of two operands disagree."""


class InvalidTauError(FramesiftError):
    """Softmax temperature must be strictly positive."""


class LengthMismatchError(FramesiftError):
    """A per-frame vector does not match the frame count of its video."""


class MissingScoresError(FramesiftError):
    """An attention-based aggregation was invoked without override scores."""


class MissingScorerError(FramesiftError):
    """An attention-based ranking was invoked without scorer weights."""


class BadMagicError(FramesiftError):
    """A binary file is not in the expected format (bad magic, version,
    or truncated/garbled payload)."""


class MissingTensorError(FramesiftError):
    """A scorer weight file lacks a required tensor."""


class ShapeMismatchError(FramesiftError):
    """A tensor in a scorer weight file has an inconsistent shape."""


class DuplicateIdError(FramesiftError):
    """An embedding store contains the same id twice."""


class ZeroFramesError(FramesiftError):
    """An embedding store entry has no frames."""


class ManifestParseError(FramesiftError):
    """A ground-truth manifest line could not be parsed."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class EmptyRanksError(FramesiftError):
    """A metric was requested over an empty rank list."""


class NonPositiveError(FramesiftError):
    """Geometric-mean recall requires strictly positive inputs."""


class NoPositivesError(FramesiftError):
    """Multilabel mAP requires at least one class with a positive."""
