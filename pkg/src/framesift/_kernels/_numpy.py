"""NumPy fallback for the corpus similarity kernel.

Mirrors the compiled extension exactly: float32 frame storage, float64
reductions, fixed per-video evaluation order. Used when the extension is
unavailable or explicitly selected.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "numpy"

MODE_QUERY = 0
MODE_TOPK = 1
MODE_OVERRIDE = 2

_ZERO_NORM_EPS = 1e-12


def _softmax(s: np.ndarray, tau: float) -> np.ndarray:
    z = np.exp((s - s.max()) / tau)
    return z / z.sum()


def _topk_weights(s: np.ndarray, k: int) -> np.ndarray:
    m = min(k, s.shape[0])
    order = np.argsort(-s, kind="stable")
    w = np.zeros(s.shape[0])
    w[order[:m]] = 1.0 / m
    return w


def corpus_similarities(
    packed: np.ndarray,
    offsets: np.ndarray,
    query: np.ndarray,
    mode: int,
    score_source: bool,
    tau: float,
    topk: int,
    renormalize: bool,
    override: np.ndarray | None = None,
) -> np.ndarray:
    """Per-video similarity of one query against a packed frame corpus.

    ``packed`` stacks every video's frame rows; video ``i`` owns rows
    ``offsets[i]:offsets[i+1]``. ``override`` supplies externally computed
    per-frame scores (same packing) for the attention methods.
    """
    n_videos = offsets.shape[0] - 1
    query = np.asarray(query, dtype=np.float64)
    sims = np.empty(n_videos)
    for i in range(n_videos):
        rows = packed[offsets[i] : offsets[i + 1]]
        s = rows @ query
        if mode == MODE_QUERY:
            w = _softmax(s, tau)
        elif mode == MODE_TOPK:
            w = _topk_weights(s, topk)
        elif mode == MODE_OVERRIDE:
            w = _softmax(np.asarray(override[offsets[i] : offsets[i + 1]], dtype=np.float64), tau)
        else:
            raise ValueError(f"unknown kernel mode {mode}")
        wsum = float(w @ s)
        if score_source or not renormalize:
            sims[i] = wsum
        else:
            norm = float(np.linalg.norm(w @ rows.astype(np.float64)))
            sims[i] = wsum / norm if norm >= _ZERO_NORM_EPS else np.nan
    return sims
