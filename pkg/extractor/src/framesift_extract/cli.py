"""Command-line entry points for batch extraction.

``framesift-extract videos`` and ``framesift-extract texts`` turn media
manifests into ``.vemb`` stores the retrieval engine ingests directly;
``texts`` can also emit the retrieval ground-truth manifest.
"""

from __future__ import annotations

import argparse
import sys

from .encoders import EncoderError
from .extract import ExtractionJob, ManifestError, extract_text_embeddings, extract_video_embeddings
from .vemb import VembWriteError
from .video import DecodeError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framesift-extract",
        description="Extract frame/caption embeddings into .vemb stores.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_videos = sub.add_parser("videos", help="encode sampled frames of each manifest video")
    p_videos.add_argument("--manifest", required=True, help="JSON lines: {video_id, path}")
    p_videos.add_argument("--output", required=True, help="output .vemb store")
    p_videos.add_argument("--model", default="clip-vit-b16",
                          help="encoder id: clip-vit-b16 or hashed-<dim> (default: clip-vit-b16)")
    p_videos.add_argument("--frames", type=int, default=8,
                          help="frames sampled uniformly per video (default: 8)")
    p_videos.add_argument("--fps", type=float,
                          help="sample by source seconds instead of a fixed count")
    p_videos.add_argument("--dtype", choices=["f16", "f32"], default="f16",
                          help="storage precision (default: f16; video stores dominate disk)")
    p_videos.set_defaults(func=_cmd_videos)

    p_texts = sub.add_parser("texts", help="encode caption manifests as K=1 query entries")
    p_texts.add_argument("--manifest", required=True, help="JSON lines: {query_id, text, video_id?}")
    p_texts.add_argument("--output", required=True, help="output .vemb store")
    p_texts.add_argument("--model", default="clip-vit-b16")
    p_texts.add_argument("--gt-output", help="write {query_id, video_id} pairs here")
    p_texts.add_argument("--dtype", choices=["f16", "f32"], default="f32",
                         help="storage precision (default: f32)")
    p_texts.set_defaults(func=_cmd_texts)

    return parser


def _cmd_videos(args: argparse.Namespace) -> int:
    frame_count = None if args.fps is not None else args.frames
    job = ExtractionJob(
        manifest_path=args.manifest,
        output_path=args.output,
        model_id=args.model,
        frame_count=frame_count,
        fps=args.fps,
        dtype=args.dtype,
    )
    result = extract_video_embeddings(job)
    print(f"written {result.written}")
    print(f"skipped {result.skipped}")
    return 0


def _cmd_texts(args: argparse.Namespace) -> int:
    job = ExtractionJob(
        manifest_path=args.manifest,
        output_path=args.output,
        model_id=args.model,
        dtype=args.dtype,
        gt_output_path=args.gt_output,
    )
    result = extract_text_embeddings(job)
    print(f"written {result.written}")
    print(f"skipped {result.skipped}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "frames", 1) is not None and getattr(args, "frames", 1) < 1:
        parser.error(f"--frames must be >= 1, got {args.frames}")
    if getattr(args, "fps", None) is not None and args.fps <= 0:
        parser.error(f"--fps must be > 0, got {args.fps}")
    try:
        return args.func(args)
    except (ManifestError, DecodeError, EncoderError, VembWriteError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main_entry() -> None:
    sys.exit(main())
