# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled corpus similarity kernel.

Semantics are defined by the NumPy twin in ``_numpy.py``: float32 frame
storage, float64 accumulation, per-video sequential reduction order. This
version removes the per-video Python overhead, which dominates at small
frame counts.
"""

import numpy as np

cimport cython
from libc.math cimport NAN, exp, sqrt

BACKEND_NAME = "cython"

cdef enum KernelMode:
    KMODE_QUERY = 0
    KMODE_TOPK = 1
    KMODE_OVERRIDE = 2

MODE_QUERY = <int> KMODE_QUERY
MODE_TOPK = <int> KMODE_TOPK
MODE_OVERRIDE = <int> KMODE_OVERRIDE

cdef double _ZERO_NORM_EPS = 1e-12


cdef void _softmax_inplace(double* s, Py_ssize_t k, double tau, double* w) noexcept nogil:
    cdef Py_ssize_t i
    cdef double m = s[0]
    cdef double z = 0.0
    for i in range(1, k):
        if s[i] > m:
            m = s[i]
    for i in range(k):
        w[i] = exp((s[i] - m) / tau)
        z += w[i]
    for i in range(k):
        w[i] /= z


cdef void _topk_weights(double* s, Py_ssize_t k, Py_ssize_t topk, double* w) noexcept nogil:
    # Repeated argmax selection; strict > keeps ties on the lower index.
    cdef Py_ssize_t m = topk if topk < k else k
    cdef Py_ssize_t i, j, best
    for i in range(k):
        w[i] = 0.0
    for j in range(m):
        best = -1
        for i in range(k):
            if w[i] == 0.0 and (best < 0 or s[i] > s[best]):
                best = i
        w[best] = 1.0  # mark; weights normalized below
    for i in range(k):
        if w[i] != 0.0:
            w[i] = 1.0 / m


def corpus_similarities(
    const float[:, ::1] packed,
    const long long[::1] offsets,
    const double[::1] query,
    int mode,
    bint score_source,
    double tau,
    int topk,
    bint renormalize,
    override=None,
):
    """Per-video similarity of one query against a packed frame corpus."""
    cdef Py_ssize_t n_videos = offsets.shape[0] - 1
    cdef Py_ssize_t d = packed.shape[1]
    cdef Py_ssize_t max_k = 0, i
    for i in range(n_videos):
        if offsets[i + 1] - offsets[i] > max_k:
            max_k = offsets[i + 1] - offsets[i]

    sims_arr = np.empty(n_videos, dtype=np.float64)
    scores_arr = np.empty(max(max_k, 1), dtype=np.float64)
    weights_arr = np.empty(max(max_k, 1), dtype=np.float64)
    agg_arr = np.empty(d, dtype=np.float64)

    cdef double[::1] sims = sims_arr
    cdef double[::1] scores = scores_arr
    cdef double[::1] weights = weights_arr
    cdef double[::1] agg = agg_arr
    cdef const double[::1] override_mv
    cdef bint has_override = override is not None
    if has_override:
        override_mv = override
    else:
        override_mv = scores  # placeholder, never read

    if mode == KMODE_OVERRIDE and not has_override:
        raise ValueError("override mode requires override scores")
    if mode not in (KMODE_QUERY, KMODE_TOPK, KMODE_OVERRIDE):
        raise ValueError(f"unknown kernel mode {mode}")

    cdef Py_ssize_t start, end, k, r, j
    cdef double acc, wsum, norm, wk
    with nogil:
        for i in range(n_videos):
            start = offsets[i]
            end = offsets[i + 1]
            k = end - start
            for r in range(k):
                acc = 0.0
                for j in range(d):
                    acc += packed[start + r, j] * query[j]
                scores[r] = acc
            if mode == KMODE_QUERY:
                _softmax_inplace(&scores[0], k, tau, &weights[0])
            elif mode == KMODE_TOPK:
                _topk_weights(&scores[0], k, topk, &weights[0])
            else:
                for r in range(k):
                    weights[r] = override_mv[start + r]
                _softmax_inplace(&weights[0], k, tau, &weights[0])
            wsum = 0.0
            for r in range(k):
                wsum += weights[r] * scores[r]
            if score_source or not renormalize:
                sims[i] = wsum
            else:
                for j in range(d):
                    agg[j] = 0.0
                for r in range(k):
                    wk = weights[r]
                    for j in range(d):
                        agg[j] += wk * packed[start + r, j]
                norm = 0.0
                for j in range(d):
                    norm += agg[j] * agg[j]
                norm = sqrt(norm)
                if norm < _ZERO_NORM_EPS:
                    sims[i] = NAN
                else:
                    sims[i] = wsum / norm
    return sims_arr
