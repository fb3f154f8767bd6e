"""Synthetic-corpus scaling benchmark.

Validates the complexity contracts of the aggregation methods: per-query
latency and retained index bytes as functions of corpus size v and frames
per video k. Mean-pooling and self-attention scoring retain only one
d-vector per video (O(v) space, k-independent query time); the
query-conditioned methods retain every frame (O(vk) space and time).

Storage is computed analytically from the tensors each method must
retain, not from process memory, so the O(v) vs O(vk) signal is not
swamped by allocator noise. Latency is a median of wall-clock runs after
warmup, measured strictly serially.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .aggregation import ATTENTION_METHODS, AggregationConfig, Method, Source
from .core import FrameMatrix, TextVector
from .retrieval import RetrievalIndex, _corpus_similarities
from .scorer import ScorerWeights, random_scorer_weights

CSV_HEADER = "method,source,v,k,d,latency_us_median,index_bytes"
COMPARE_CSV_HEADER = "backend,method,source,v,k,d,latency_us_median"

#: Index entries are stored as float32.
_ITEM_BYTES = 4

_DEFAULT_METHODS = (
    AggregationConfig(method=Method.MEAN, source=Source.FEATURE),
    AggregationConfig(method=Method.QUERY_SCORING, source=Source.FEATURE),
)


@dataclass(frozen=True)
class BenchConfig:
    """One scaling sweep: the cross product of v values, k values and methods."""

    v_values: tuple[int, ...] = (250, 500, 1000)
    k_values: tuple[int, ...] = (8, 16, 32)
    d: int = 64
    methods: tuple[AggregationConfig, ...] = _DEFAULT_METHODS
    queries_per_cell: int = 9
    warmup: int = 3
    seed: int = 0
    backend: str | None = None

    def __post_init__(self):
        if not self.v_values or min(self.v_values) < 1:
            raise ValueError("v_values must be positive")
        if not self.k_values or min(self.k_values) < 1:
            raise ValueError("k_values must be positive")
        if self.d < 1 or self.queries_per_cell < 1 or self.warmup < 0:
            raise ValueError("d and queries_per_cell must be positive, warmup non-negative")
        if not self.methods:
            raise ValueError("need at least one method")


@dataclass(frozen=True)
class BenchRow:
    method: str
    source: str
    v: int
    k: int
    d: int
    latency_us_median: float
    index_bytes: int


def index_bytes_for(method: Method, v: int, k: int, d: int) -> int:
    """Bytes of the tensors a method must retain to answer queries.

    Mean-pooling and self-attention scoring only need one aggregated
    d-vector per video; every query-conditioned method needs the frames.
    """
    if method in (Method.MEAN, Method.SELF_ATTN):
        return v * d * _ITEM_BYTES
    return v * k * d * _ITEM_BYTES


def _unit_rows(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    rows = rng.standard_normal((n, d))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return np.ascontiguousarray(rows, dtype=np.float32)


def _synthetic_index(rng: np.random.Generator, v: int, k: int, d: int) -> RetrievalIndex:
    rows = _unit_rows(rng, v * k, d)
    videos = [FrameMatrix(f"v{i:06d}", rows[i * k : (i + 1) * k]) for i in range(v)]
    return RetrievalIndex(videos)


def _synthetic_queries(rng: np.random.Generator, n: int, d: int) -> list[TextVector]:
    rows = _unit_rows(rng, n, d)
    return [TextVector(f"q{i:04d}", rows[i]) for i in range(n)]


def _median_latency_us(
    index: RetrievalIndex,
    queries: list[TextVector],
    cfg: AggregationConfig,
    scorer: ScorerWeights | None,
    warmup: int,
    backend: str | None,
) -> float:
    for query in queries[:warmup]:
        _corpus_similarities(index, query, cfg, scorer, backend)
    latencies = []
    for query in queries[warmup:]:
        t0 = time.perf_counter()
        _corpus_similarities(index, query, cfg, scorer, backend)
        latencies.append((time.perf_counter() - t0) * 1e6)
    return float(np.median(latencies))


def run_scaling_bench(cfg: BenchConfig) -> list[BenchRow]:
    """Measure every (v, k, method) cell of the sweep, strictly serially."""
    rng = np.random.default_rng(cfg.seed)
    needs_scorer = any(m.method in ATTENTION_METHODS for m in cfg.methods)
    scorer = random_scorer_weights(cfg.d, seed=cfg.seed) if needs_scorer else None
    rows: list[BenchRow] = []
    for v in cfg.v_values:
        for k in cfg.k_values:
            index = _synthetic_index(rng, v, k, cfg.d)
            queries = _synthetic_queries(rng, cfg.warmup + cfg.queries_per_cell, cfg.d)
            for method_cfg in cfg.methods:
                lat = _median_latency_us(index, queries, method_cfg, scorer, cfg.warmup, cfg.backend)
                rows.append(
                    BenchRow(
                        method=method_cfg.method.value,
                        source=method_cfg.source.value,
                        v=v,
                        k=k,
                        d=cfg.d,
                        latency_us_median=lat,
                        index_bytes=index_bytes_for(method_cfg.method, v, k, cfg.d),
                    )
                )
    return rows


def rows_to_csv(rows: list[BenchRow]) -> str:
    """Render sweep rows in the fixed CSV schema (UTF-8, LF endings)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for row in rows:
        writer.writerow(
            [row.method, row.source, row.v, row.k, row.d,
             f"{row.latency_us_median:.3f}", row.index_bytes]
        )
    return buf.getvalue()


@dataclass(frozen=True)
class BackendCompareRow:
    backend: str
    method: str
    source: str
    v: int
    k: int
    d: int
    latency_us_median: float


def compare_backends(cfg: BenchConfig) -> list[BackendCompareRow]:
    """Run the same sweep once per available kernel backend.

    The compiled kernel and the NumPy twin compute identical similarities;
    this shows what the extension buys (mostly the per-video Python
    overhead at small k).
    """
    rows: list[BackendCompareRow] = []
    for backend in _kernels.available_backends():
        sweep = BenchConfig(
            v_values=cfg.v_values,
            k_values=cfg.k_values,
            d=cfg.d,
            methods=cfg.methods,
            queries_per_cell=cfg.queries_per_cell,
            warmup=cfg.warmup,
            seed=cfg.seed,
            backend=backend,
        )
        for row in run_scaling_bench(sweep):
            rows.append(
                BackendCompareRow(
                    backend=backend,
                    method=row.method,
                    source=row.source,
                    v=row.v,
                    k=row.k,
                    d=row.d,
                    latency_us_median=row.latency_us_median,
                )
            )
    return rows


def compare_rows_to_csv(rows: list[BackendCompareRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COMPARE_CSV_HEADER.split(","))
    for row in rows:
        writer.writerow(
            [row.backend, row.method, row.source, row.v, row.k, row.d,
             f"{row.latency_us_median:.3f}"]
        )
    return buf.getvalue()
