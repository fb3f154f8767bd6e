"""Frame-aggregation strategies.

A video is collapsed into a single query-video similarity in one of two
ways (the "source" axis):

* ``feature``: combine frame embeddings into one vector, optionally
  re-normalize it, then dot it with the query.
* ``score``: combine the per-frame similarity logits directly.

The "method" axis picks the combination weights: uniform (``mean``),
temperature softmax of the query-frame cosines (``query_scoring``),
uniform over the hard top-K frames (``topk``), or temperature softmax of
externally supplied scores from an attention scorer (``self_attn`` /
``joint_attn``).

Without re-normalization the two sources coincide by linearity of the dot
product, so feature aggregates are re-normalized by default.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import FrameMatrix, TextVector, WeightVector, frame_scores, l2_normalize, softmax_weights
from .errors import InvalidTauError, LengthMismatchError, MissingScoresError

DEFAULT_TAU = 0.1


class Method(str, Enum):
    MEAN = "mean"
    QUERY_SCORING = "query_scoring"
    TOPK = "topk"
    SELF_ATTN = "self_attn"
    JOINT_ATTN = "joint_attn"


class Source(str, Enum):
    FEATURE = "feature"
    SCORE = "score"


#: Methods whose weights come from a loaded attention scorer.
ATTENTION_METHODS = frozenset({Method.SELF_ATTN, Method.JOINT_ATTN})


@dataclass(frozen=True)
class AggregationConfig:
    """Fully determines how a video is scored against a query."""

    method: Method = Method.QUERY_SCORING
    source: Source = Source.FEATURE
    tau: float = DEFAULT_TAU
    topk_k: int = 8
    renormalize_feature: bool = True

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "source", Source(self.source))
        if not self.tau > 0:
            raise InvalidTauError(f"tau must be > 0, got {self.tau}")
        if self.topk_k < 1:
            raise ValueError(f"topk_k must be >= 1, got {self.topk_k}")


@dataclass(frozen=True)
class AggregatedEmbedding:
    """A single d-dimensional video embedding produced by aggregation."""

    vector: np.ndarray  # (d,) float64
    renormalized: bool


def weighted_mean(video: FrameMatrix, weights: WeightVector, renormalize: bool) -> AggregatedEmbedding:
    """Weighted sum of frame embeddings, optionally re-normalized."""
    if len(weights) != video.k:
        raise LengthMismatchError(f"{len(weights)} weights for {video.k} frames")
    vec = weights.weights @ video.frames.astype(np.float64)
    if renormalize:
        vec = l2_normalize(vec)
    return AggregatedEmbedding(vec, renormalize)


def topk_select(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the min(k, K) largest scores, ascending.

    Ties are broken towards the lower frame index; k is clamped to the
    frame count.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    s = np.asarray(scores, dtype=np.float64)
    order = np.argsort(-s, kind="stable")  # stable: equal scores keep index order
    return np.sort(order[: min(k, s.shape[0])])


def frame_weights(
    video: FrameMatrix,
    query: TextVector,
    cfg: AggregationConfig,
    override_scores: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame (scores, weights) under a config.

    The scores are always the query-frame cosines; the weights are
    whatever the method assigns to each frame. This is the quantity the
    ``weights`` CLI subcommand exports for inspection.
    """
    scores = frame_scores(video, query)
    if cfg.method is Method.MEAN:
        w = np.full(video.k, 1.0 / video.k)
    elif cfg.method is Method.QUERY_SCORING:
        w = softmax_weights(scores, cfg.tau).weights
    elif cfg.method is Method.TOPK:
        sel = topk_select(scores, cfg.topk_k)
        w = np.zeros(video.k)
        w[sel] = 1.0 / sel.shape[0]
    else:  # attention methods
        if override_scores is None:
            raise MissingScoresError(f"{cfg.method.value} aggregation needs scorer-provided scores")
        s = np.asarray(override_scores, dtype=np.float64)
        if s.shape[0] != video.k:
            raise LengthMismatchError(f"{s.shape[0]} override scores for {video.k} frames")
        w = softmax_weights(s, cfg.tau).weights
    return scores, w


def similarity(
    video: FrameMatrix,
    query: TextVector,
    cfg: AggregationConfig,
    override_scores: np.ndarray | None = None,
) -> float:
    """Query-video similarity under a config.

    The score source weights the cosines directly; the feature source
    weights the embeddings, optionally re-normalizes the aggregate, and
    dots it with the query. Attention methods take their weights from
    ``override_scores`` but are still ranked against the query.
    """
    scores, w = frame_weights(video, query, cfg, override_scores)
    weighted_score = float(w @ scores)
    if cfg.source is Source.SCORE or not cfg.renormalize_feature:
        # dot(sum_k w_k I_k, T) == sum_k w_k s_k by linearity
        return weighted_score
    agg = weighted_mean(video, WeightVector(w, cfg.tau), renormalize=True)
    return float(agg.vector @ query.vector.astype(np.float64))
