"""Scaling benchmark structure and analytic storage accounting."""

from framesift._kernels import available_backends
from framesift.aggregation import AggregationConfig, Method
from framesift.bench import (
    BenchConfig,
    CSV_HEADER,
    compare_backends,
    compare_rows_to_csv,
    index_bytes_for,
    rows_to_csv,
    run_scaling_bench,
)


def small_config(**overrides):
    defaults = dict(
        v_values=(20, 40),
        k_values=(4, 8),
        d=16,
        methods=(
            AggregationConfig(method=Method.MEAN),
            AggregationConfig(method=Method.QUERY_SCORING),
        ),
        queries_per_cell=3,
        warmup=1,
        seed=7,
    )
    defaults.update(overrides)
    return BenchConfig(**defaults)


class TestIndexBytes:
    def test_mean_independent_of_k(self):
        assert index_bytes_for(Method.MEAN, 100, 8, 64) == index_bytes_for(Method.MEAN, 100, 16, 64)
        assert index_bytes_for(Method.MEAN, 100, 8, 64) == 100 * 64 * 4

    def test_self_attn_matches_mean(self):
        assert index_bytes_for(Method.SELF_ATTN, 50, 32, 16) == index_bytes_for(Method.MEAN, 50, 32, 16)

    def test_query_doubles_with_k(self):
        assert index_bytes_for(Method.QUERY_SCORING, 100, 16, 64) == 2 * index_bytes_for(
            Method.QUERY_SCORING, 100, 8, 64
        )
        assert index_bytes_for(Method.QUERY_SCORING, 100, 8, 64) == 100 * 8 * 64 * 4

    def test_joint_and_topk_retain_frames(self):
        for method in (Method.JOINT_ATTN, Method.TOPK):
            assert index_bytes_for(method, 10, 6, 8) == 10 * 6 * 8 * 4


class TestRunScalingBench:
    def test_row_count_and_cells(self):
        cfg = small_config()
        rows = run_scaling_bench(cfg)
        assert len(rows) == len(cfg.v_values) * len(cfg.k_values) * len(cfg.methods)
        cells = {(r.method, r.v, r.k) for r in rows}
        assert len(cells) == len(rows)
        assert all(r.latency_us_median > 0 for r in rows)

    def test_bytes_columns_follow_contract(self):
        rows = run_scaling_bench(small_config())
        by_cell = {(r.method, r.v, r.k): r.index_bytes for r in rows}
        for v in (20, 40):
            assert by_cell[("mean", v, 4)] == by_cell[("mean", v, 8)]
            assert by_cell[("query_scoring", v, 8)] == 2 * by_cell[("query_scoring", v, 4)]

    def test_latency_grows_with_corpus(self):
        cfg = small_config(v_values=(100, 200, 400), k_values=(8,), queries_per_cell=9, warmup=3)
        rows = [r for r in run_scaling_bench(cfg) if r.method == "query_scoring"]
        lat = [r.latency_us_median for r in sorted(rows, key=lambda r: r.v)]
        inversions = sum(1 for a, b in zip(lat, lat[1:]) if b <= a)
        assert inversions <= 1

    def test_csv_schema(self):
        rows = run_scaling_bench(small_config())
        text = rows_to_csv(rows)
        lines = text.splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == len(rows) + 1
        assert "\r" not in text
        first = lines[1].split(",")
        assert len(first) == 7
        assert first[0] in ("mean", "query_scoring")

    def test_attention_method_sweeps(self):
        cfg = small_config(
            methods=(AggregationConfig(method=Method.SELF_ATTN),),
            v_values=(10,),
            k_values=(4,),
        )
        rows = run_scaling_bench(cfg)
        assert rows[0].method == "self_attn"
        assert rows[0].index_bytes == 10 * 16 * 4


class TestCompareBackends:
    def test_rows_cover_available_backends(self):
        cfg = small_config(v_values=(20,), k_values=(4,))
        rows = compare_backends(cfg)
        assert {r.backend for r in rows} == set(available_backends())
        text = compare_rows_to_csv(rows)
        assert text.splitlines()[0] == "backend,method,source,v,k,d,latency_us_median"
