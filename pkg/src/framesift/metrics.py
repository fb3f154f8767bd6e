"""Retrieval and classification metrics over ranks and score matrices.

Ranks are 1-based positions of the ground-truth item in a total order
(ties already resolved by the ranking stage), so every metric here is a
pure, deterministic function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyRanksError, NonPositiveError, NoPositivesError

RECALL_KS = (1, 5, 10, 50)


def recall_at_k(ranks: list[int], k: int) -> float:
    """Fraction of queries whose ground truth ranks within the top k."""
    if not ranks:
        raise EmptyRanksError("no ranks given")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return sum(1 for r in ranks if r <= k) / len(ranks)


def rank_stats(ranks: list[int]) -> tuple[float, float]:
    """(median rank, mean rank). Even-count median is the midpoint of the
    middle two values."""
    if not ranks:
        raise EmptyRanksError("no ranks given")
    arr = np.asarray(ranks, dtype=np.float64)
    return float(np.median(arr)), float(arr.mean())


def geometric_mean_recall(r1: float, r5: float, r10: float) -> float:
    """Cube root of the product of R@1, R@5, R@10 (fractions or percents)."""
    if r1 <= 0 or r5 <= 0 or r10 <= 0:
        raise NonPositiveError(f"recalls must be > 0, got ({r1}, {r5}, {r10})")
    return float(np.cbrt(r1 * r5 * r10))


def multilabel_map(
    scores: np.ndarray,
    labels: dict[str, frozenset[int]] | dict[str, set[int]],
    video_ids: list[str],
) -> float:
    """Mean average precision for multilabel classification-as-retrieval.

    ``scores`` is (v, C) with row order given by ``video_ids``; ``labels``
    maps video ids to class-column indices. Per class, videos are ranked
    by descending score (ties by ascending video id) and AP averages the
    precision at each positive hit. Classes without positives are skipped.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2:
        raise ValueError(f"scores must be 2-D, got shape {scores.shape}")
    if scores.shape[0] != len(video_ids):
        raise ValueError(f"{scores.shape[0]} score rows for {len(video_ids)} video ids")
    n_classes = scores.shape[1]
    for vid, classes in labels.items():
        for c in classes:
            if c >= n_classes:
                raise ValueError(f"video {vid!r} references class {c}, matrix has {n_classes}")

    positives_per_class: list[set[int]] = [set() for _ in range(n_classes)]
    id_to_row = {vid: i for i, vid in enumerate(video_ids)}
    for vid, classes in labels.items():
        if vid not in id_to_row:
            raise ValueError(f"labeled video {vid!r} not among the scored videos")
        for c in classes:
            positives_per_class[c].add(id_to_row[vid])

    aps = []
    for c in range(n_classes):
        positives = positives_per_class[c]
        if not positives:
            continue
        order = sorted(range(len(video_ids)), key=lambda i: (-scores[i, c], video_ids[i]))
        hits = 0
        precisions = []
        for rank, row in enumerate(order, start=1):
            if row in positives:
                hits += 1
                precisions.append(hits / rank)
        aps.append(sum(precisions) / len(positives))
    if not aps:
        raise NoPositivesError("no class has a positive example")
    return float(np.mean(aps))


@dataclass(frozen=True)
class EvalReport:
    """Retrieval metrics for one evaluation run."""

    r_at: dict[int, float]
    med_rank: float
    mean_rank: float
    geo_mean_r: float
    per_query_ranks: list[int]
    map: float | None = None

    def to_dict(self) -> dict:
        out = {
            "queries": len(self.per_query_ranks),
            **{f"r_at_{k}": self.r_at[k] for k in sorted(self.r_at)},
            "med_rank": self.med_rank,
            "mean_rank": self.mean_rank,
            "geo_mean_r": self.geo_mean_r,
        }
        if self.map is not None:
            out["map"] = self.map
        return out

    def to_lines(self) -> list[str]:
        """Flat ``key value`` lines with fixed formatting (grep-friendly)."""
        lines = [f"queries {len(self.per_query_ranks)}"]
        for k in sorted(self.r_at):
            lines.append(f"r_at_{k} {self.r_at[k]:.6f}")
        lines.append(f"med_rank {self.med_rank:.6g}")
        lines.append(f"mean_rank {self.mean_rank:.6g}")
        lines.append(f"geo_mean_r {self.geo_mean_r:.6f}")
        if self.map is not None:
            lines.append(f"map {self.map:.6f}")
        return lines


def evaluate_ranks(ranks: list[int], map_score: float | None = None) -> EvalReport:
    """Standard report over per-query ground-truth ranks.

    The geometric-mean recall summary is 0 when any of R@{1,5,10} is 0
    (the cube root is undefined at 0 only in the sense that the op below
    rejects it; an all-miss run still deserves a report).
    """
    r_at = {k: recall_at_k(ranks, k) for k in RECALL_KS}
    med, mean = rank_stats(ranks)
    if min(r_at[1], r_at[5], r_at[10]) > 0:
        geo = geometric_mean_recall(r_at[1], r_at[5], r_at[10])
    else:
        geo = 0.0
    return EvalReport(
        r_at=r_at,
        med_rank=med,
        mean_rank=mean,
        geo_mean_r=geo,
        per_query_ranks=list(ranks),
        map=map_score,
    )
