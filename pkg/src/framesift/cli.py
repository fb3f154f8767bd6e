"""Command-line front end.

Subcommands: ``eval`` (retrieval metrics against a ground-truth manifest),
``search`` (ranked results per query, optionally two-stage), ``classify``
(multilabel mAP over class prompts), ``weights`` (per-frame score/weight
trace for one video-query pair), ``bench`` (scaling sweep CSV) and
``validate`` (file checks).

Exit codes: 0 success, 1 data error (bad file contents, unresolvable
ids), 2 usage error (unknown or out-of-range flags). All data outputs are
deterministic: fixed float formatting, sorted iteration, no timestamps.
"""

from __future__ import annotations

import argparse
import json
import sys

from .aggregation import ATTENTION_METHODS, AggregationConfig, Method, Source, frame_weights
from .bench import (
    BenchConfig,
    compare_backends,
    compare_rows_to_csv,
    rows_to_csv,
    run_scaling_bench,
)
from .errors import FramesiftError
from .metrics import evaluate_ranks, multilabel_map
from .retrieval import (
    DEFAULT_FRAMES_PER_VIDEO,
    build_index,
    classify,
    rank_t2v,
    text_vectors_from_store,
    two_stage_rank,
)
from .scorer import joint_attention_scores, load_scorer_weights, self_attention_scores
from .store import load_ground_truth, read_store

_METHOD_FLAGS = {
    "mean": Method.MEAN,
    "query": Method.QUERY_SCORING,
    "topk": Method.TOPK,
    "self-attn": Method.SELF_ATTN,
    "joint-attn": Method.JOINT_ATTN,
}


def _add_agg_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=sorted(_METHOD_FLAGS), default="query",
                   help="frame aggregation method (default: query)")
    p.add_argument("--source", choices=["feature", "score"], default="feature",
                   help="aggregate frame features or per-frame score logits (default: feature)")
    p.add_argument("--tau", type=float, default=0.1,
                   help="softmax temperature, must be > 0 (default: 0.1)")
    p.add_argument("--topk", type=int, default=8,
                   help="frame count for the topk method, must be >= 1 (default: 8)")
    p.add_argument("--frames", type=int, default=DEFAULT_FRAMES_PER_VIDEO,
                   help="uniform test-time frame subsample per video, must be >= 1 (default: 120)")
    p.add_argument("--scorer", help="VWTS weight file for the attention methods")
    p.add_argument("--backend", choices=["numpy", "cython"],
                   help="similarity kernel backend (default: best available)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framesift",
        description="Long-video text retrieval over per-frame embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="retrieval metrics against a ground-truth manifest")
    p_eval.add_argument("--videos", required=True, help="video embedding store (.vemb)")
    p_eval.add_argument("--queries", required=True, help="query embedding store (.vemb, K=1)")
    p_eval.add_argument("--gt", required=True, help="ground-truth manifest (JSON lines)")
    _add_agg_flags(p_eval)
    p_eval.add_argument("--rerank", type=int, default=0,
                        help="two-stage rerank depth; 0 means full ranking (default: 0)")
    p_eval.add_argument("--output", help="also write the report as JSON")
    p_eval.add_argument("--dump-ranks", help="write per-query ranks as 'query_id rank' lines")
    p_eval.set_defaults(func=_cmd_eval)

    p_search = sub.add_parser("search", help="ranked videos per query")
    p_search.add_argument("--videos", required=True)
    p_search.add_argument("--queries", required=True)
    p_search.add_argument("--query", help="run a single query id instead of all")
    p_search.add_argument("--top", type=int, default=10, help="results per query (default: 10)")
    _add_agg_flags(p_search)
    p_search.add_argument("--rerank", type=int, default=0,
                          help="two-stage rerank depth; 0 means full ranking (default: 0)")
    p_search.add_argument("--output", help="write results as JSON")
    p_search.set_defaults(func=_cmd_search)

    p_classify = sub.add_parser("classify", help="multilabel classification as video-to-text retrieval")
    p_classify.add_argument("--videos", required=True)
    p_classify.add_argument("--queries", required=True, help="class prompt embeddings (.vemb, K=1)")
    p_classify.add_argument("--gt", required=True, help="multilabel manifest (video_id -> labels)")
    _add_agg_flags(p_classify)
    p_classify.add_argument("--output", help="write the report as JSON")
    p_classify.set_defaults(func=_cmd_classify)

    p_weights = sub.add_parser("weights", help="per-frame score/weight trace for one video and query")
    p_weights.add_argument("--videos", required=True)
    p_weights.add_argument("--queries", required=True)
    p_weights.add_argument("--video", required=True, help="video id to trace")
    p_weights.add_argument("--query", required=True, help="query id to trace")
    _add_agg_flags(p_weights)
    p_weights.add_argument("--output", help="write the CSV here instead of stdout")
    p_weights.set_defaults(func=_cmd_weights)

    p_bench = sub.add_parser("bench", help="latency/storage scaling sweep")
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--csv", help="write the sweep CSV here instead of stdout")
    p_bench.add_argument("--v-values", default="250,500,1000", help="comma-separated corpus sizes")
    p_bench.add_argument("--k-values", default="8,16,32", help="comma-separated frames per video")
    p_bench.add_argument("--d", type=int, default=64, help="embedding dimension (default: 64)")
    p_bench.add_argument("--queries-per-cell", type=int, default=9,
                         help="timed queries per cell, median reported (default: 9)")
    p_bench.add_argument("--methods", default="mean,query",
                         help="comma-separated methods to sweep (default: mean,query)")
    p_bench.add_argument("--source", choices=["feature", "score"], default="feature")
    p_bench.add_argument("--tau", type=float, default=0.1)
    p_bench.add_argument("--topk", type=int, default=8)
    p_bench.add_argument("--compare-backends", action="store_true",
                         help="sweep every available kernel backend instead")
    p_bench.set_defaults(func=_cmd_bench)

    p_validate = sub.add_parser("validate", help="check store and manifest files")
    p_validate.add_argument("--videos")
    p_validate.add_argument("--queries")
    p_validate.add_argument("--gt")
    p_validate.set_defaults(func=_cmd_validate)

    return parser


def _check_common(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    if getattr(args, "tau", 0.1) <= 0:
        parser.error(f"--tau must be > 0, got {args.tau}")
    if getattr(args, "topk", 1) < 1:
        parser.error(f"--topk must be >= 1, got {args.topk}")
    if getattr(args, "frames", 1) < 1:
        parser.error(f"--frames must be >= 1, got {args.frames}")
    if getattr(args, "rerank", 0) < 0:
        parser.error(f"--rerank must be >= 0, got {args.rerank}")
    if getattr(args, "top", 1) < 1:
        parser.error(f"--top must be >= 1, got {args.top}")
    if getattr(args, "queries_per_cell", 1) < 1:
        parser.error(f"--queries-per-cell must be >= 1, got {args.queries_per_cell}")
    if getattr(args, "d", 1) < 1:
        parser.error(f"--d must be >= 1, got {args.d}")
    method = getattr(args, "method", None)
    if method is not None and _METHOD_FLAGS[method] in ATTENTION_METHODS and not args.scorer:
        parser.error(f"--method {method} requires --scorer")


def _agg_config(args: argparse.Namespace) -> AggregationConfig:
    return AggregationConfig(
        method=_METHOD_FLAGS[args.method],
        source=Source(args.source),
        tau=args.tau,
        topk_k=args.topk,
    )


def _load_engine_inputs(args: argparse.Namespace):
    index = build_index(read_store(args.videos), args.frames)
    queries = text_vectors_from_store(read_store(args.queries))
    scorer = load_scorer_weights(args.scorer) if args.scorer else None
    return index, queries, scorer


def _rank_fn(args: argparse.Namespace, index, query, cfg, scorer):
    rerank = getattr(args, "rerank", 0)
    if rerank and rerank < index.v:
        return two_stage_rank(index, query, cfg, rerank, scorer=scorer, backend=args.backend)
    return rank_t2v(index, query, cfg, scorer=scorer, backend=args.backend)


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _cmd_eval(args: argparse.Namespace) -> int:
    index, queries, scorer = _load_engine_inputs(args)
    gt = load_ground_truth(args.gt)
    if not gt.retrieval:
        raise FramesiftError(f"{args.gt}: no retrieval records (query_id/video_id pairs)")
    by_id = {q.query_id: q for q in queries}
    cfg = _agg_config(args)
    ranks = []
    per_query = []
    for qid in sorted(gt.retrieval):
        target = gt.retrieval[qid]
        if qid not in by_id:
            raise FramesiftError(f"ground-truth query {qid!r} not in {args.queries}")
        if target not in index.id_to_pos:
            raise FramesiftError(f"ground-truth video {target!r} not in {args.videos}")
        ranking = _rank_fn(args, index, by_id[qid], cfg, scorer)
        rank = ranking.rank_of(target)
        ranks.append(rank)
        per_query.append((qid, rank))
    report = evaluate_ranks(ranks)
    print("\n".join(report.to_lines()))
    if args.output:
        _write_text(args.output, json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    if args.dump_ranks:
        _write_text(args.dump_ranks, "".join(f"{qid} {rank}\n" for qid, rank in per_query))
    return 0


def _cmd_search(args: argparse.Namespace) -> int:
    index, queries, scorer = _load_engine_inputs(args)
    cfg = _agg_config(args)
    if args.query is not None:
        queries = [q for q in queries if q.query_id == args.query]
        if not queries:
            raise FramesiftError(f"query {args.query!r} not in {args.queries}")
    lines = []
    results: dict[str, list] = {}
    for query in queries:
        ranking = _rank_fn(args, index, query, cfg, scorer)
        hits = ranking.entries[: args.top]
        results[query.query_id] = [[vid, sim] for vid, sim in hits]
        for pos, (vid, sim) in enumerate(hits, start=1):
            lines.append(f"{query.query_id}\t{pos}\t{vid}\t{sim:.6f}")
    print("\n".join(lines))
    if args.output:
        _write_text(args.output, json.dumps(results, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_classify(args: argparse.Namespace) -> int:
    index, prompts, scorer = _load_engine_inputs(args)
    gt = load_ground_truth(args.gt)
    if not gt.labels:
        raise FramesiftError(f"{args.gt}: no multilabel records (video_id/labels)")
    cfg = _agg_config(args)
    scores = classify(index, prompts, cfg, scorer=scorer, backend=args.backend)
    try:
        map_score = multilabel_map(scores, gt.labels, index.video_ids)
    except ValueError as exc:
        raise FramesiftError(str(exc)) from exc
    lines = [f"videos {index.v}", f"classes {len(prompts)}", f"map {map_score:.6f}"]
    print("\n".join(lines))
    if args.output:
        payload = {"videos": index.v, "classes": len(prompts), "map": map_score}
        _write_text(args.output, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_weights(args: argparse.Namespace) -> int:
    index, queries, scorer = _load_engine_inputs(args)
    cfg = _agg_config(args)
    if args.video not in index.id_to_pos:
        raise FramesiftError(f"video {args.video!r} not in {args.videos}")
    by_id = {q.query_id: q for q in queries}
    if args.query not in by_id:
        raise FramesiftError(f"query {args.query!r} not in {args.queries}")
    video = index.video(index.id_to_pos[args.video])
    query = by_id[args.query]
    override = None
    if cfg.method is Method.SELF_ATTN:
        override = self_attention_scores(video, scorer)
    elif cfg.method is Method.JOINT_ATTN:
        override = joint_attention_scores(video, query, scorer)
    scores, weights = frame_weights(video, query, cfg, override)
    trace_scores = override if override is not None else scores
    out = ["frame_idx,score,weight"]
    for i in range(video.k):
        out.append(f"{i},{trace_scores[i]:.6f},{weights[i]:.6f}")
    _write_text(args.output, "\n".join(out) + "\n")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    try:
        v_values = tuple(int(x) for x in args.v_values.split(","))
        k_values = tuple(int(x) for x in args.k_values.split(","))
        methods = tuple(
            AggregationConfig(
                method=_METHOD_FLAGS[m.strip()],
                source=Source(args.source),
                tau=args.tau,
                topk_k=args.topk,
            )
            for m in args.methods.split(",")
        )
    except (ValueError, KeyError) as exc:
        raise FramesiftError(f"bad bench flag value: {exc}") from exc
    cfg = BenchConfig(
        v_values=v_values,
        k_values=k_values,
        d=args.d,
        methods=methods,
        queries_per_cell=args.queries_per_cell,
        seed=args.seed,
    )
    if args.compare_backends:
        text = compare_rows_to_csv(compare_backends(cfg))
    else:
        text = rows_to_csv(run_scaling_bench(cfg))
    _write_text(args.csv, text)
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    if not (args.videos or args.queries or args.gt):
        raise FramesiftError("nothing to validate: give --videos, --queries and/or --gt")
    lines = []
    video_ids: set[str] = set()
    query_ids: set[str] = set()
    if args.videos:
        store = read_store(args.videos)
        store.validate()
        total = sum(mat.shape[0] for _, mat in store.entries)
        video_ids = set(store.ids())
        lines.append(f"videos {len(store.entries)} d {store.d} frames {total}")
    if args.queries:
        store = read_store(args.queries)
        vectors = text_vectors_from_store(store)
        query_ids = {v.query_id for v in vectors}
        lines.append(f"queries {len(vectors)} d {store.d}")
    if args.gt:
        gt = load_ground_truth(args.gt)
        if args.queries:
            missing = sorted(set(gt.retrieval) - query_ids)
            if missing:
                raise FramesiftError(f"{args.gt}: unknown query ids {missing[:5]}")
        if args.videos:
            missing = sorted({v for v in gt.retrieval.values() if v not in video_ids}
                             | {v for v in gt.labels if v not in video_ids})
            if missing:
                raise FramesiftError(f"{args.gt}: unknown video ids {missing[:5]}")
        lines.append(f"gt_retrieval {len(gt.retrieval)} gt_multilabel {len(gt.labels)}")
    lines.append("ok")
    print("\n".join(lines))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _check_common(parser, args)
    try:
        return args.func(args)
    except (FramesiftError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main_entry() -> None:
    sys.exit(main())
