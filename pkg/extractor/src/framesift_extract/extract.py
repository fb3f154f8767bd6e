"""Extraction pipelines: media manifests in, ``.vemb`` stores out.

Video manifests are JSON lines of ``{"video_id": ..., "path": ...}``;
caption manifests are ``{"query_id": ..., "text": ..., "video_id": ...}``
(``video_id`` optional, used for the retrieval ground-truth pairing).
Undecodable videos and empty captions are skipped with a warning so one
bad input cannot sink a batch; the output store stays valid for the
successes.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .encoders import get_encoder
from .vemb import write_vemb
from .video import DecodeError, decode_frames

logger = logging.getLogger(__name__)


class ManifestError(Exception):
    """Raised when a manifest line is malformed."""


@dataclass(frozen=True)
class ExtractionJob:
    """What to extract and where to put it."""

    manifest_path: str
    output_path: str
    model_id: str = "clip-vit-b16"
    frame_count: int | None = 8
    fps: float | None = None
    dtype: str = "f16"  # video stores dominate the footprint; engine computes wider
    gt_output_path: str | None = None  # caption jobs: retrieval pairs written here

    def __post_init__(self):
        if (self.frame_count is None) == (self.fps is None):
            raise ValueError("give exactly one of frame_count or fps")
        if self.frame_count is not None and self.frame_count < 1:
            raise ValueError(f"frame_count must be >= 1, got {self.frame_count}")
        if self.fps is not None and not self.fps > 0:
            raise ValueError(f"fps must be > 0, got {self.fps}")


@dataclass
class ExtractionResult:
    written: int = 0
    skipped: int = 0
    warnings: list[str] = field(default_factory=list)


def _read_manifest(path, required: tuple[str, ...]) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{line_no}: invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise ManifestError(f"{path}:{line_no}: record is not an object")
            for key in required:
                if not isinstance(record.get(key), str) or not record[key]:
                    raise ManifestError(f"{path}:{line_no}: missing or empty field {key!r}")
            records.append(record)
    if not records:
        raise ManifestError(f"{path}: manifest contains no records")
    return records


def extract_video_embeddings(job: ExtractionJob) -> ExtractionResult:
    """Encode sampled frames of every manifest video into a store."""
    encoder = get_encoder(job.model_id)
    records = _read_manifest(job.manifest_path, required=("video_id", "path"))
    result = ExtractionResult()
    entries: list[tuple[str, np.ndarray]] = []
    for record in records:
        try:
            frames = decode_frames(record["path"], frame_count=job.frame_count, fps=job.fps)
        except DecodeError as exc:
            result.skipped += 1
            result.warnings.append(str(exc))
            logger.warning("skipping %s: %s", record["video_id"], exc)
            continue
        entries.append((record["video_id"], encoder.encode_images(frames)))
    if not entries:
        raise ManifestError(f"{job.manifest_path}: every video failed to decode")
    write_vemb(job.output_path, entries, d=encoder.d, dtype=job.dtype)
    result.written = len(entries)
    return result


def extract_text_embeddings(job: ExtractionJob) -> ExtractionResult:
    """Encode captions as K=1 entries; optionally emit ground-truth pairs."""
    encoder = get_encoder(job.model_id)
    records = _read_manifest(job.manifest_path, required=("query_id", "text"))
    result = ExtractionResult()
    kept: list[dict] = []
    for record in records:
        if not record["text"].strip():
            result.skipped += 1
            result.warnings.append(f"{record['query_id']}: empty caption")
            logger.warning("skipping %s: empty caption", record["query_id"])
            continue
        kept.append(record)
    if not kept:
        raise ManifestError(f"{job.manifest_path}: every caption was empty")
    vectors = encoder.encode_texts([r["text"] for r in kept])
    entries = [(r["query_id"], vectors[i][None, :]) for i, r in enumerate(kept)]
    write_vemb(job.output_path, entries, d=encoder.d, dtype=job.dtype)
    result.written = len(entries)
    if job.gt_output_path is not None:
        with open(job.gt_output_path, "w", encoding="utf-8", newline="") as fh:
            for r in kept:
                if "video_id" in r:
                    fh.write(json.dumps({"query_id": r["query_id"], "video_id": r["video_id"]}) + "\n")
    return result
