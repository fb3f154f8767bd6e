"""framesift: long-video text retrieval over precomputed frame embeddings.

Videos are represented by per-frame image-text embeddings; a query is
matched against a video by aggregating the frames, either uniformly
(mean-pooling) or weighted by a temperature softmax of per-frame
relevance scores, with the query-frame cosine as the default score.
"""

from ._kernels import available_backends, default_backend
from .aggregation import (
    AggregatedEmbedding,
    AggregationConfig,
    Method,
    Source,
    frame_weights,
    similarity,
    topk_select,
    weighted_mean,
)
from .core import (
    FrameMatrix,
    TextVector,
    WeightVector,
    frame_scores,
    l2_normalize,
    softmax_weights,
    uniform_subsample,
)
from .errors import FramesiftError
from .metrics import (
    EvalReport,
    evaluate_ranks,
    geometric_mean_recall,
    multilabel_map,
    rank_stats,
    recall_at_k,
)
from .retrieval import (
    RankedList,
    RetrievalIndex,
    build_index,
    classify,
    rank_t2v,
    similarity_matrix,
    text_vectors_from_store,
    two_stage_rank,
)
from .scorer import (
    ScorerWeights,
    joint_attention_scores,
    load_scorer_weights,
    random_scorer_weights,
    save_scorer_weights,
    self_attention_scores,
)
from .store import (
    EmbeddingStore,
    GroundTruth,
    load_ground_truth,
    read_store,
    write_store,
)

__version__ = "0.1.0"

__all__ = [
    "AggregatedEmbedding",
    "AggregationConfig",
    "EmbeddingStore",
    "EvalReport",
    "FrameMatrix",
    "FramesiftError",
    "GroundTruth",
    "Method",
    "RankedList",
    "RetrievalIndex",
    "ScorerWeights",
    "Source",
    "TextVector",
    "WeightVector",
    "available_backends",
    "build_index",
    "classify",
    "default_backend",
    "evaluate_ranks",
    "frame_scores",
    "frame_weights",
    "geometric_mean_recall",
    "joint_attention_scores",
    "l2_normalize",
    "load_ground_truth",
    "load_scorer_weights",
    "multilabel_map",
    "rank_stats",
    "rank_t2v",
    "random_scorer_weights",
    "read_store",
    "recall_at_k",
    "save_scorer_weights",
    "self_attention_scores",
    "similarity",
    "similarity_matrix",
    "softmax_weights",
    "text_vectors_from_store",
    "topk_select",
    "two_stage_rank",
    "uniform_subsample",
    "weighted_mean",
    "write_store",
]
