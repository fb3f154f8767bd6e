"""Core type and scoring primitive tests."""

import math

import numpy as np
import pytest

from framesift.core import (
    FrameMatrix,
    TextVector,
    WeightVector,
    frame_scores,
    l2_normalize,
    softmax_weights,
    uniform_subsample,
)
from framesift.errors import (
    DimMismatchError,
    InvalidTauError,
    NonFiniteError,
    ZeroNormError,
)


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


class TestL2Normalize:
    def test_three_four_five(self):
        np.testing.assert_allclose(l2_normalize([3.0, 4.0]), [0.6, 0.8], atol=1e-12)

    def test_axis_vector(self):
        np.testing.assert_allclose(l2_normalize([0.0, 7.0]), [0.0, 1.0], atol=1e-12)

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroNormError):
            l2_normalize([0.0, 0.0])

    def test_nan_rejected(self):
        with pytest.raises(NonFiniteError):
            l2_normalize([1.0, np.nan])

    def test_unit_norm_and_parallel(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            v = rng.standard_normal(rng.integers(1, 40))
            out = l2_normalize(v)
            assert abs(np.linalg.norm(out) - 1.0) < 1e-6
            # parallel: cross terms vanish
            np.testing.assert_allclose(out * np.linalg.norm(v), v, atol=1e-9)


class TestFrameMatrix:
    def test_from_raw_normalizes_rows(self):
        fm = FrameMatrix.from_raw("v", np.array([[3.0, 4.0], [0.0, 2.0]]))
        np.testing.assert_allclose(fm.frames, [[0.6, 0.8], [0.0, 1.0]], atol=1e-6)
        assert fm.k == 2 and fm.d == 2
        assert fm.frames.dtype == np.float32

    def test_rejects_non_unit_rows(self):
        with pytest.raises(ValueError):
            FrameMatrix("v", np.array([[3.0, 4.0]], dtype=np.float32))

    def test_rejects_nan(self):
        with pytest.raises(NonFiniteError):
            FrameMatrix.from_raw("v", np.array([[np.nan, 1.0]]))

    def test_rejects_zero_row(self):
        with pytest.raises(ZeroNormError):
            FrameMatrix.from_raw("v", np.array([[1.0, 0.0], [0.0, 0.0]]))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            FrameMatrix.from_raw("v", np.empty((0, 4)))


class TestFrameScores:
    def test_self_similarity(self):
        t = TextVector.from_raw("q", [1.0, 2.0, 2.0])
        fm = FrameMatrix("v", t.vector[None, :])
        np.testing.assert_allclose(frame_scores(fm, t), [1.0], atol=1e-6)

    def test_orthonormal_basis(self):
        fm = FrameMatrix.from_raw("v", np.eye(2))
        t = TextVector.from_raw("q", [1.0, 0.0])
        np.testing.assert_allclose(frame_scores(fm, t), [1.0, 0.0], atol=1e-12)

    def test_matches_rowwise_dot_oracle(self):
        rng = np.random.default_rng(123)
        fm = FrameMatrix.from_raw("v", rng.standard_normal((5, 8)))
        t = TextVector.from_raw("q", rng.standard_normal(8))
        expected = [float(np.dot(row.astype(np.float64), t.vector.astype(np.float64)))
                    for row in fm.frames]
        np.testing.assert_allclose(frame_scores(fm, t), expected, atol=1e-6)

    def test_cosine_bounds(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            fm = FrameMatrix.from_raw("v", rng.standard_normal((6, 12)))
            t = TextVector.from_raw("q", rng.standard_normal(12))
            s = frame_scores(fm, t)
            assert (s >= -1 - 1e-6).all() and (s <= 1 + 1e-6).all()

    def test_dim_mismatch(self):
        fm = FrameMatrix.from_raw("v", np.eye(3))
        with pytest.raises(DimMismatchError):
            frame_scores(fm, TextVector.from_raw("q", [1.0, 0.0]))

    def test_linear_in_raw_query(self):
        rng = np.random.default_rng(9)
        fm = FrameMatrix.from_raw("v", rng.standard_normal((4, 6)))
        t1, t2 = rng.standard_normal(6), rng.standard_normal(6)
        a, b = 0.7, -1.3
        lhs = frame_scores(fm, a * t1 + b * t2)
        rhs = a * frame_scores(fm, t1) + b * frame_scores(fm, t2)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)


class TestSoftmaxWeights:
    def test_constant_scores_uniform(self):
        for c in (-3.0, 0.0, 11.5):
            w = softmax_weights(np.full(3, c), tau=0.37)
            np.testing.assert_allclose(w.weights, [1 / 3] * 3, atol=1e-12)

    def test_two_frame_sharp_temperature(self):
        # Independent evaluation: w2/w1 = exp((0.4-0.2)/0.1), so
        # w = [1, e^2]/(1+e^2).
        e2 = math.exp(-2.0)
        expected = [e2 / (1 + e2), 1 / (1 + e2)]
        w = softmax_weights(np.array([0.2, 0.4]), tau=0.1)
        np.testing.assert_allclose(w.weights, expected, rtol=1e-12)
        np.testing.assert_allclose(w.weights, [0.1192, 0.8808], atol=5e-5)

    def test_huge_tau_is_uniform(self):
        w = softmax_weights(np.array([0.9, 0.1, 0.5]), tau=1e6)
        np.testing.assert_allclose(w.weights, [1 / 3] * 3, atol=1e-6)

    def test_tiny_tau_is_argmax(self):
        w = softmax_weights(np.array([0.9, 0.1, 0.5]), tau=1e-6)
        np.testing.assert_allclose(w.weights, [1.0, 0.0, 0.0], atol=1e-12)

    def test_shift_invariance(self):
        rng = np.random.default_rng(21)
        for _ in range(30):
            s = rng.standard_normal(rng.integers(1, 12))
            tau = float(rng.uniform(0.01, 10))
            shift = float(rng.uniform(-100, 100))
            w1 = softmax_weights(s, tau).weights
            w2 = softmax_weights(s + shift, tau).weights
            np.testing.assert_allclose(w1, w2, rtol=1e-9)

    def test_sums_to_one(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            s = rng.uniform(-1, 1, rng.integers(1, 50))
            w = softmax_weights(s, float(rng.uniform(0.005, 100)))
            assert abs(w.weights.sum() - 1.0) < 1e-6
            assert (w.weights >= 0).all()

    def test_invalid_tau(self):
        with pytest.raises(InvalidTauError):
            softmax_weights(np.array([0.1]), tau=0.0)
        with pytest.raises(InvalidTauError):
            softmax_weights(np.array([0.1]), tau=-1.0)

    def test_nonfinite_scores(self):
        with pytest.raises(NonFiniteError):
            softmax_weights(np.array([0.1, np.inf]), tau=1.0)

    def test_weight_vector_invariants(self):
        with pytest.raises(ValueError):
            WeightVector(np.array([0.7, 0.7]), tau=1.0)
        with pytest.raises(ValueError):
            WeightVector(np.array([-0.1, 1.1]), tau=1.0)


class TestUniformSubsample:
    def test_six_to_three(self):
        fm = FrameMatrix.from_raw("v", np.eye(6))
        out = uniform_subsample(fm, 3)
        np.testing.assert_array_equal(out.frames, fm.frames[[0, 2, 4]])

    def test_passthrough_when_enough(self):
        fm = FrameMatrix.from_raw("v", np.eye(4))
        assert uniform_subsample(fm, 120) is fm

    def test_exact_fit_identity(self):
        rng = np.random.default_rng(11)
        fm = FrameMatrix.from_raw("v", rng.standard_normal((120, 8)))
        assert uniform_subsample(fm, 120) is fm

    def test_idempotent(self):
        rng = np.random.default_rng(12)
        fm = FrameMatrix.from_raw("v", rng.standard_normal((17, 4)))
        once = uniform_subsample(fm, 5)
        twice = uniform_subsample(once, 5)
        np.testing.assert_array_equal(once.frames, twice.frames)

    def test_order_preserving(self):
        rng = np.random.default_rng(13)
        fm = FrameMatrix.from_raw("v", rng.standard_normal((40, 4)))
        out = uniform_subsample(fm, 7)
        idx = [np.flatnonzero((fm.frames == row).all(axis=1))[0] for row in out.frames]
        assert idx == sorted(idx)
        assert out.k == 7

    def test_invalid_n(self):
        fm = FrameMatrix.from_raw("v", np.eye(3))
        with pytest.raises(ValueError):
            uniform_subsample(fm, 0)
