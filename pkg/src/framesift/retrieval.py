"""Corpus indexing and exhaustive text-video ranking.

The index keeps two representations of every video: a normalized mean
embedding (enough for mean-pooling, one dot product per video) and the
packed per-frame matrix (needed by the query-conditioned methods). Mean
rankings never read the packed frames; an access counter on the frame
accessors makes that contract testable.

Self-attention scores are query-independent, so their aggregated video
embeddings are computed once per (scorer, tau) and reused for every query,
reducing that method to the same per-query cost as mean-pooling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .aggregation import ATTENTION_METHODS, AggregationConfig, Method, Source
from .core import FrameMatrix, TextVector, softmax_weights, uniform_subsample
from .errors import DimMismatchError, MissingScorerError, ZeroNormError
from .scorer import ScorerWeights, joint_attention_scores, self_attention_scores
from .store import EmbeddingStore

DEFAULT_FRAMES_PER_VIDEO = 120


@dataclass(frozen=True)
class RankedList:
    """Video ids with similarity values, best first.

    Full rankings are non-increasing in similarity with ties broken by
    ascending id; a two-stage ranking is non-increasing within its
    re-scored head and within its coarse tail (see two_stage_rank).
    """

    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        positions = {vid: i + 1 for i, (vid, _) in enumerate(self.entries)}
        if len(positions) != len(self.entries):
            raise ValueError("ranked list contains duplicate ids")
        object.__setattr__(self, "_positions", positions)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> list[str]:
        return [vid for vid, _ in self.entries]

    @property
    def similarities(self) -> list[float]:
        return [sim for _, sim in self.entries]

    def rank_of(self, video_id: str) -> int:
        """1-based rank of a video in this list."""
        try:
            return self._positions[video_id]
        except KeyError:
            raise KeyError(f"video {video_id!r} not in ranking") from None


class RetrievalIndex:
    """Immutable corpus of videos ready for ranking."""

    def __init__(self, videos: list[FrameMatrix]):
        if not videos:
            raise ValueError("index needs at least one video")
        d = videos[0].d
        for fm in videos:
            if fm.d != d:
                raise DimMismatchError(f"video {fm.video_id!r} has dim {fm.d}, expected {d}")
        ids = [fm.video_id for fm in videos]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate video ids in index")

        offsets = np.zeros(len(videos) + 1, dtype=np.int64)
        for i, fm in enumerate(videos):
            offsets[i + 1] = offsets[i] + fm.k
        packed = np.empty((offsets[-1], d), dtype=np.float32)
        for i, fm in enumerate(videos):
            packed[offsets[i] : offsets[i + 1]] = fm.frames

        raw_means = np.empty((len(videos), d), dtype=np.float64)
        for i, fm in enumerate(videos):
            raw_means[i] = fm.frames.astype(np.float64).mean(axis=0)
        norms = np.linalg.norm(raw_means, axis=1)
        if (norms < 1e-12).any():
            bad = ids[int(np.argmin(norms))]
            raise ZeroNormError(f"video {bad!r}: mean embedding has near-zero norm")

        self.video_ids: list[str] = ids
        self.id_to_pos: dict[str, int] = {vid: i for i, vid in enumerate(ids)}
        self.mean_embeddings: np.ndarray = raw_means / norms[:, None]
        self._raw_means = raw_means
        self._videos = [FrameMatrix(fm.video_id, packed[offsets[i] : offsets[i + 1]]) for i, fm in enumerate(videos)]
        self._packed = packed
        self._offsets = offsets
        self._frame_accesses = 0
        self._self_attn_cache: dict[tuple[int, float], tuple[np.ndarray, np.ndarray, ScorerWeights]] = {}

    @property
    def v(self) -> int:
        return len(self.video_ids)

    @property
    def d(self) -> int:
        return self._packed.shape[1]

    # -- frame accessors (counted, to make the mean-method contract testable) --

    @property
    def frames_access_count(self) -> int:
        return self._frame_accesses

    def reset_frames_access_count(self) -> None:
        self._frame_accesses = 0

    def video(self, pos: int) -> FrameMatrix:
        self._frame_accesses += 1
        return self._videos[pos]

    def packed_frames(self) -> tuple[np.ndarray, np.ndarray]:
        self._frame_accesses += 1
        return self._packed, self._offsets

    # -- cached query-independent aggregates for the self-attention scorer --

    def self_attn_aggregates(
        self, scorer: ScorerWeights, tau: float
    ) -> tuple[np.ndarray, np.ndarray]:
        """(v, d) weighted-sum embeddings and their norms for a scorer."""
        key = (id(scorer), float(tau))
        if key not in self._self_attn_cache:
            agg = np.empty((self.v, self.d), dtype=np.float64)
            for i in range(self.v):
                fm = self.video(i)
                weights = softmax_weights(self_attention_scores(fm, scorer), tau).weights
                agg[i] = weights @ fm.frames.astype(np.float64)
            norms = np.linalg.norm(agg, axis=1)
            if (norms < 1e-12).any():
                bad = self.video_ids[int(np.argmin(norms))]
                raise ZeroNormError(f"video {bad!r}: aggregated embedding has near-zero norm")
            # the scorer is kept in the value to pin its id for the key's lifetime
            self._self_attn_cache[key] = (agg, norms, scorer)
        agg, norms, _ = self._self_attn_cache[key]
        return agg, norms


def build_index(store: EmbeddingStore, frames_per_video: int = DEFAULT_FRAMES_PER_VIDEO) -> RetrievalIndex:
    """Normalize, subsample and index every video of a store."""
    if frames_per_video < 1:
        raise ValueError(f"frames_per_video must be >= 1, got {frames_per_video}")
    store.validate()
    videos = [
        uniform_subsample(FrameMatrix.from_raw(entry_id, mat), frames_per_video)
        for entry_id, mat in store.entries
    ]
    return RetrievalIndex(videos)


def text_vectors_from_store(store: EmbeddingStore) -> list[TextVector]:
    """Interpret a store's entries as single-vector text embeddings."""
    store.validate()
    vectors = []
    for entry_id, mat in store.entries:
        if mat.shape[0] != 1:
            raise ValueError(f"query entry {entry_id!r} has K={mat.shape[0]}, expected 1")
        vectors.append(TextVector.from_raw(entry_id, mat[0]))
    return vectors


def _check_dims(index: RetrievalIndex, query: TextVector) -> None:
    if query.d != index.d:
        raise DimMismatchError(f"query dim {query.d} != index dim {index.d}")


def _joint_override(
    index: RetrievalIndex, query: TextVector, scorer: ScorerWeights
) -> np.ndarray:
    """Packed per-frame joint-attention scores for one query."""
    override = np.empty(int(index._offsets[-1]), dtype=np.float64)
    for i in range(index.v):
        fm = index.video(i)
        override[index._offsets[i] : index._offsets[i + 1]] = joint_attention_scores(fm, query, scorer)
    return override


def _corpus_similarities(
    index: RetrievalIndex,
    query: TextVector,
    cfg: AggregationConfig,
    scorer: ScorerWeights | None,
    backend: str | None,
) -> np.ndarray:
    """Similarity of one query against every video, as a (v,) float64 array."""
    _check_dims(index, query)
    if cfg.method in ATTENTION_METHODS and scorer is None:
        raise MissingScorerError(f"method {cfg.method.value} requires scorer weights")

    q = query.vector.astype(np.float64)
    score_source = cfg.source is Source.SCORE
    plain = score_source or not cfg.renormalize_feature

    if cfg.method is Method.MEAN:
        # Both sources reduce to a dot with a precomputed mean; frames untouched.
        return (index._raw_means if plain else index.mean_embeddings) @ q

    if cfg.method is Method.SELF_ATTN:
        agg, norms = index.self_attn_aggregates(scorer, cfg.tau)
        sims = agg @ q
        return sims if plain else sims / norms

    kern = _kernels.get_backend(backend)
    if cfg.method is Method.JOINT_ATTN:
        override = _joint_override(index, query, scorer)
        packed, offsets = index.packed_frames()
        sims = kern.corpus_similarities(
            packed, offsets, q, _kernels.MODE_OVERRIDE, score_source, cfg.tau, cfg.topk_k,
            cfg.renormalize_feature, override,
        )
    else:
        mode = _kernels.MODE_QUERY if cfg.method is Method.QUERY_SCORING else _kernels.MODE_TOPK
        packed, offsets = index.packed_frames()
        sims = kern.corpus_similarities(
            packed, offsets, q, mode, score_source, cfg.tau, cfg.topk_k,
            cfg.renormalize_feature, None,
        )
    if not np.isfinite(sims).all():
        raise ZeroNormError("an aggregated embedding had near-zero norm")
    return sims


def _ranked_from(ids: list[str], sims: np.ndarray) -> RankedList:
    order = sorted(range(len(ids)), key=lambda i: (-sims[i], ids[i]))
    return RankedList(tuple((ids[i], float(sims[i])) for i in order))


def rank_t2v(
    index: RetrievalIndex,
    query: TextVector,
    cfg: AggregationConfig,
    scorer: ScorerWeights | None = None,
    backend: str | None = None,
) -> RankedList:
    """Full descending ranking of all videos for one text query.

    Ties are broken by ascending video id, which makes every rank (and
    hence MedR/MnR) deterministic.
    """
    sims = _corpus_similarities(index, query, cfg, scorer, backend)
    return _ranked_from(index.video_ids, sims)


def two_stage_rank(
    index: RetrievalIndex,
    query: TextVector,
    cfg: AggregationConfig,
    rerank_depth: int,
    scorer: ScorerWeights | None = None,
    backend: str | None = None,
) -> RankedList:
    """Coarse mean-embedding ranking, then re-score the top candidates.

    The top min(rerank_depth, v) coarse candidates are re-scored with
    ``cfg`` and re-ordered; the remainder keeps its coarse order (and
    coarse similarities) appended after. With rerank_depth = v the result
    is identical to rank_t2v.
    """
    if rerank_depth < 1:
        raise ValueError(f"rerank_depth must be >= 1, got {rerank_depth}")
    coarse_cfg = AggregationConfig(method=Method.MEAN, source=Source.FEATURE, tau=cfg.tau)
    coarse = rank_t2v(index, query, coarse_cfg, backend=backend)
    m = min(rerank_depth, index.v)
    head_ids = coarse.ids[:m]
    positions = [index.id_to_pos[vid] for vid in head_ids]

    if cfg.method in (Method.MEAN, Method.SELF_ATTN):
        # These score from one precomputed vector per video, so "re-scoring
        # the head" is a subset of the same corpus-level product.
        sims = _corpus_similarities(index, query, cfg, scorer, backend)[positions]
    else:
        sub_index = RetrievalIndex([index._videos[p] for p in positions])
        sims = _corpus_similarities(sub_index, query, cfg, scorer, backend)
    head = sorted(zip(head_ids, sims.tolist()), key=lambda e: (-e[1], e[0]))
    return RankedList(tuple(head) + coarse.entries[m:])


def similarity_matrix(
    index: RetrievalIndex,
    queries: list[TextVector],
    cfg: AggregationConfig,
    scorer: ScorerWeights | None = None,
    backend: str | None = None,
    workers: int = 1,
) -> np.ndarray:
    """(v, q) matrix of similarities; column j belongs to queries[j].

    Columns are independent, so the result is identical for any worker
    count; video-to-text retrieval is this matrix transposed.
    """
    if not queries:
        raise ValueError("need at least one query")
    out = np.empty((index.v, len(queries)), dtype=np.float64)
    if workers <= 1:
        for j, query in enumerate(queries):
            out[:, j] = _corpus_similarities(index, query, cfg, scorer, backend)
    else:
        def column(j: int) -> None:
            out[:, j] = _corpus_similarities(index, queries[j], cfg, scorer, backend)

        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(column, range(len(queries))))
    return out


def classify(
    index: RetrievalIndex,
    class_prompts: list[TextVector],
    cfg: AggregationConfig,
    scorer: ScorerWeights | None = None,
    backend: str | None = None,
) -> np.ndarray:
    """(v, C) score matrix of every video against every class prompt.

    Classification is video-to-text retrieval over a fixed prompt set, so
    this is just the similarity matrix with prompts as queries.
    """
    return similarity_matrix(index, class_prompts, cfg, scorer=scorer, backend=backend)
