"""Core vector types and frame-level scoring primitives.

Conventions used throughout the engine:

* All embeddings are L2-normalized once, at ingest, and similarity is the
  plain dot product of normalized vectors (cosine).
* Normalized embeddings are stored as float32 (the native precision of the
  upstream image-text encoders); every reduction (dot products, softmax,
  weighted sums) is carried out in float64.
* Frame subsampling is deterministic, so identical inputs always produce
  identical rankings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimMismatchError,
    InvalidTauError,
    NonFiniteError,
    ZeroNormError,
)

#: Norms below this are treated as zero (not normalizable).
ZERO_NORM_EPS = 1e-12

#: Tolerance on the unit-norm invariant of ingested embeddings.
NORM_ATOL = 1e-4


def l2_normalize(v: np.ndarray) -> np.ndarray:
    """Return ``v / ||v||`` as float64.

    Raises NonFiniteError for NaN/Inf entries and ZeroNormError when the
    norm is below ``ZERO_NORM_EPS``.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        raise ZeroNormError("cannot normalize an empty vector")
    if not np.isfinite(v).all():
        raise NonFiniteError("vector contains NaN or Inf")
    norm = float(np.linalg.norm(v))
    if norm < ZERO_NORM_EPS:
        raise ZeroNormError(f"vector norm {norm:g} is below {ZERO_NORM_EPS:g}")
    return v / norm


def _normalize_rows(mat: np.ndarray, what: str) -> np.ndarray:
    """Row-wise L2 normalization in float64, returned as float32."""
    mat = np.asarray(mat, dtype=np.float64)
    if not np.isfinite(mat).all():
        raise NonFiniteError(f"{what} contains NaN or Inf")
    norms = np.linalg.norm(mat, axis=1)
    if (norms < ZERO_NORM_EPS).any():
        bad = int(np.argmin(norms))
        raise ZeroNormError(f"{what} row {bad} has near-zero norm")
    return np.ascontiguousarray(mat / norms[:, None], dtype=np.float32)


@dataclass(frozen=True)
class FrameMatrix:
    """A video's K x d matrix of unit-norm frame embeddings."""

    video_id: str
    frames: np.ndarray  # (K, d) float32, C-contiguous, rows unit-norm

    def __post_init__(self):
        f = self.frames
        if f.ndim != 2 or f.shape[0] < 1 or f.shape[1] < 1:
            raise ValueError(f"frames must be a non-empty 2-D matrix, got shape {f.shape}")
        if not np.isfinite(f).all():
            raise NonFiniteError(f"video {self.video_id!r}: frames contain NaN or Inf")
        norms = np.linalg.norm(f.astype(np.float64), axis=1)
        if not np.allclose(norms, 1.0, atol=NORM_ATOL):
            raise ValueError(f"video {self.video_id!r}: frame rows are not unit-norm")

    @classmethod
    def from_raw(cls, video_id: str, frames: np.ndarray) -> "FrameMatrix":
        """Normalize raw extractor output row-wise and wrap it."""
        frames = np.asarray(frames)
        if frames.ndim != 2 or frames.shape[0] < 1 or frames.shape[1] < 1:
            raise ValueError(
                f"video {video_id!r}: frames must be a non-empty 2-D matrix, got shape {frames.shape}"
            )
        return cls(video_id, _normalize_rows(frames, f"video {video_id!r}"))

    @property
    def k(self) -> int:
        return self.frames.shape[0]

    @property
    def d(self) -> int:
        return self.frames.shape[1]


@dataclass(frozen=True)
class TextVector:
    """A unit-norm text/query/class-prompt embedding."""

    query_id: str
    vector: np.ndarray  # (d,) float32, unit-norm

    def __post_init__(self):
        v = self.vector
        if v.ndim != 1 or v.shape[0] < 1:
            raise ValueError(f"vector must be 1-D and non-empty, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise NonFiniteError(f"query {self.query_id!r}: vector contains NaN or Inf")
        if abs(float(np.linalg.norm(v.astype(np.float64))) - 1.0) > NORM_ATOL:
            raise ValueError(f"query {self.query_id!r}: vector is not unit-norm")

    @classmethod
    def from_raw(cls, query_id: str, vector: np.ndarray) -> "TextVector":
        return cls(query_id, l2_normalize(vector).astype(np.float32))

    @property
    def d(self) -> int:
        return self.vector.shape[0]


@dataclass(frozen=True)
class WeightVector:
    """Per-frame softmax weights together with the temperature that made them."""

    weights: np.ndarray  # (K,) float64, non-negative, sums to 1
    tau: float

    def __post_init__(self):
        w = self.weights
        if w.ndim != 1 or w.shape[0] < 1:
            raise ValueError("weights must be 1-D and non-empty")
        if (w < 0).any() or abs(float(w.sum()) - 1.0) > 1e-6:
            raise ValueError("weights must be non-negative and sum to 1")

    def __len__(self) -> int:
        return self.weights.shape[0]


def frame_scores(video: FrameMatrix, query: "TextVector | np.ndarray") -> np.ndarray:
    """Per-frame relevance scores: dot product of each frame with the query.

    Accepts either a TextVector or a raw 1-D array (handy for linearity
    checks on unnormalized vectors). Returns float64 of length K; for
    unit-norm inputs every entry is a cosine in [-1, 1].
    """
    if isinstance(query, TextVector):
        qv = query.vector
    else:
        qv = np.asarray(query)
        if qv.ndim != 1:
            raise ValueError(f"query must be 1-D, got shape {qv.shape}")
        if not np.isfinite(qv).all():
            raise NonFiniteError("query vector contains NaN or Inf")
    if video.d != qv.shape[0]:
        raise DimMismatchError(f"video dim {video.d} != query dim {qv.shape[0]}")
    return video.frames @ qv.astype(np.float64)


def softmax_weights(scores: np.ndarray, tau: float) -> WeightVector:
    """Temperature softmax over per-frame scores (max-subtracted, float64).

    Small tau sharpens towards the best-scoring frame; large tau flattens
    towards the uniform mean.
    """
    if not tau > 0:
        raise InvalidTauError(f"tau must be > 0, got {tau}")
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.shape[0] < 1:
        raise ValueError("scores must be 1-D and non-empty")
    if not np.isfinite(s).all():
        raise NonFiniteError("scores contain NaN or Inf")
    z = np.exp((s - s.max()) / tau)
    return WeightVector(z / z.sum(), float(tau))


def uniform_subsample(video: FrameMatrix, n: int) -> FrameMatrix:
    """Deterministically keep ``n`` evenly spaced frames.

    Rows at indices floor(i*K/n) for i = 0..n-1; if n >= K the video is
    returned unchanged.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    k = video.k
    if n >= k:
        return video
    idx = (np.arange(n, dtype=np.int64) * k) // n
    return FrameMatrix(video.video_id, np.ascontiguousarray(video.frames[idx]))
