"""Aggregation dispatch, temperature limits and collapse identities."""

import numpy as np
import pytest

from framesift.aggregation import (
    AggregationConfig,
    Method,
    Source,
    frame_weights,
    similarity,
    topk_select,
    weighted_mean,
)
from framesift.core import FrameMatrix, TextVector, WeightVector, frame_scores, softmax_weights
from framesift.errors import InvalidTauError, LengthMismatchError, MissingScoresError


def random_instance(rng, k=None, d=None):
    k = k or int(rng.integers(1, 9))
    d = d or int(rng.integers(2, 17))
    fm = FrameMatrix.from_raw("v", rng.standard_normal((k, d)))
    t = TextVector.from_raw("q", rng.standard_normal(d))
    return fm, t


class TestWeightedMean:
    def test_singleton(self):
        t = TextVector.from_raw("q", [2.0, 1.0])
        fm = FrameMatrix("v", t.vector[None, :])
        out = weighted_mean(fm, WeightVector(np.array([1.0]), 1.0), renormalize=False)
        np.testing.assert_allclose(out.vector, fm.frames[0], atol=1e-7)

    def test_uniform_orthonormal_renormalized(self):
        fm = FrameMatrix.from_raw("v", np.eye(3)[:2])
        w = WeightVector(np.array([0.5, 0.5]), 1.0)
        out = weighted_mean(fm, w, renormalize=True)
        r = 1 / np.sqrt(2)
        np.testing.assert_allclose(out.vector, [r, r, 0.0], atol=1e-12)
        assert out.renormalized

    def test_matches_summation_oracle(self):
        rng = np.random.default_rng(42)
        fm, _ = random_instance(rng, k=8, d=16)
        w = rng.dirichlet(np.ones(8))
        out = weighted_mean(fm, WeightVector(w, 1.0), renormalize=False)
        expected = np.zeros(16)
        for wk, row in zip(w, fm.frames):
            expected += wk * row.astype(np.float64)
        np.testing.assert_allclose(out.vector, expected, atol=1e-6)

    def test_length_mismatch(self):
        fm = FrameMatrix.from_raw("v", np.eye(3))
        with pytest.raises(LengthMismatchError):
            weighted_mean(fm, WeightVector(np.array([1.0]), 1.0), renormalize=False)


class TestTopkSelect:
    def test_plain_ordering(self):
        np.testing.assert_array_equal(topk_select(np.array([0.1, 0.9, 0.5]), 2), [1, 2])

    def test_tie_break_low_index(self):
        np.testing.assert_array_equal(topk_select(np.array([0.5, 0.5, 0.5]), 2), [0, 1])

    def test_clamped_to_frame_count(self):
        np.testing.assert_array_equal(topk_select(np.arange(10.0), 60), np.arange(10))

    def test_sorted_ascending(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            s = rng.standard_normal(rng.integers(1, 20))
            k = int(rng.integers(1, 25))
            sel = topk_select(s, k)
            assert list(sel) == sorted(sel)
            assert len(sel) == min(k, len(s))
            # every selected score >= every unselected score
            if len(sel) < len(s):
                unsel = np.setdiff1d(np.arange(len(s)), sel)
                assert s[sel].min() >= s[unsel].max() - 1e-15


class TestSimilarityDispatch:
    def test_k1_all_methods_collapse(self):
        rng = np.random.default_rng(31)
        fm, t = random_instance(rng, k=1)
        expected = float(frame_scores(fm, t)[0])
        for method in Method:
            for source in Source:
                cfg = AggregationConfig(method=method, source=source)
                override = np.array([0.3]) if method in (Method.SELF_ATTN, Method.JOINT_ATTN) else None
                assert abs(similarity(fm, t, cfg, override) - expected) < 1e-6, (method, source)

    def test_mean_score_equals_unrenormalized_feature(self):
        rng = np.random.default_rng(32)
        for _ in range(25):
            fm, t = random_instance(rng)
            a = similarity(fm, t, AggregationConfig(method=Method.MEAN, source=Source.SCORE))
            b = similarity(
                fm, t,
                AggregationConfig(method=Method.MEAN, source=Source.FEATURE, renormalize_feature=False),
            )
            assert abs(a - b) < 1e-6

    def test_mean_score_is_score_mean(self):
        rng = np.random.default_rng(33)
        fm, t = random_instance(rng, k=6)
        got = similarity(fm, t, AggregationConfig(method=Method.MEAN, source=Source.SCORE))
        assert abs(got - float(frame_scores(fm, t).mean())) < 1e-12

    def test_sharp_temperature_picks_planted_frame(self):
        fm = FrameMatrix.from_raw("v", np.eye(4)[:2])
        t = TextVector.from_raw("q", np.eye(4)[0])
        cfg = AggregationConfig(method=Method.QUERY_SCORING, tau=1e-6)
        assert abs(similarity(fm, t, cfg) - 1.0) < 1e-9

    def test_large_tau_matches_mean(self):
        rng = np.random.default_rng(34)
        for _ in range(40):
            fm, t = random_instance(rng)
            a = similarity(fm, t, AggregationConfig(method=Method.QUERY_SCORING, tau=1e6))
            b = similarity(fm, t, AggregationConfig(method=Method.MEAN))
            assert abs(a - b) < 1e-4

    def test_small_tau_matches_best_frame(self):
        rng = np.random.default_rng(35)
        done = 0
        while done < 40:
            fm, t = random_instance(rng)
            s = frame_scores(fm, t)
            if fm.k > 1 and np.sort(s)[-1] - np.sort(s)[-2] < 1e-6:
                continue  # needs a unique max
            done += 1
            a = similarity(fm, t, AggregationConfig(method=Method.QUERY_SCORING, tau=1e-6))
            assert abs(a - s.max()) < 1e-4

    def test_topk_with_large_k_equals_mean(self):
        rng = np.random.default_rng(36)
        for _ in range(25):
            fm, t = random_instance(rng)
            for source in Source:
                a = similarity(fm, t, AggregationConfig(method=Method.TOPK, source=source, topk_k=fm.k + 5))
                b = similarity(fm, t, AggregationConfig(method=Method.MEAN, source=source))
                assert abs(a - b) < 1e-6

    def test_topk_score_is_mean_of_top_scores(self):
        rng = np.random.default_rng(37)
        fm, t = random_instance(rng, k=7)
        s = frame_scores(fm, t)
        got = similarity(fm, t, AggregationConfig(method=Method.TOPK, source=Source.SCORE, topk_k=3))
        assert abs(got - float(np.sort(s)[-3:].mean())) < 1e-12

    def test_score_source_stays_in_cosine_range(self):
        rng = np.random.default_rng(38)
        for _ in range(30):
            fm, t = random_instance(rng)
            for method in (Method.MEAN, Method.QUERY_SCORING, Method.TOPK):
                got = similarity(fm, t, AggregationConfig(method=method, source=Source.SCORE))
                assert -1 - 1e-6 <= got <= 1 + 1e-6

    def test_attention_requires_override(self):
        rng = np.random.default_rng(39)
        fm, t = random_instance(rng)
        with pytest.raises(MissingScoresError):
            similarity(fm, t, AggregationConfig(method=Method.SELF_ATTN))

    def test_attention_weighting_uses_override(self):
        # Override concentrates the weight on frame 1 even though the
        # query matches frame 0 perfectly.
        fm = FrameMatrix.from_raw("v", np.eye(4)[:2])
        t = TextVector.from_raw("q", np.eye(4)[0])
        cfg = AggregationConfig(method=Method.JOINT_ATTN, source=Source.SCORE, tau=1e-6)
        got = similarity(fm, t, cfg, override_scores=np.array([0.0, 10.0]))
        assert abs(got - 0.0) < 1e-9

    def test_tau_scaling_keeps_argmax_weight(self):
        rng = np.random.default_rng(40)
        for _ in range(25):
            s = rng.standard_normal(rng.integers(2, 12))
            argmaxes = {int(np.argmax(softmax_weights(s, tau).weights))
                        for tau in (1e-3, 0.1, 1.0, 10.0, 1e3)}
            assert len(argmaxes) == 1

    def test_frame_weights_sum_to_one(self):
        rng = np.random.default_rng(41)
        for method in Method:
            fm, t = random_instance(rng, k=5)
            override = rng.standard_normal(5) if method in (Method.SELF_ATTN, Method.JOINT_ATTN) else None
            _, w = frame_weights(fm, t, AggregationConfig(method=method), override)
            assert abs(w.sum() - 1.0) < 1e-6


class TestAggregationConfig:
    def test_rejects_bad_tau(self):
        with pytest.raises(InvalidTauError):
            AggregationConfig(tau=0.0)

    def test_rejects_bad_topk(self):
        with pytest.raises(ValueError):
            AggregationConfig(topk_k=0)

    def test_accepts_string_enums(self):
        cfg = AggregationConfig(method="topk", source="score")
        assert cfg.method is Method.TOPK and cfg.source is Source.SCORE

    def test_default_temperature(self):
        assert AggregationConfig().tau == 0.1
