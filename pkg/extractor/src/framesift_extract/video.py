"""Frame decoding and deterministic frame sampling.

A "video" is either a decodable media file (anything OpenCV can open) or
a directory of image files taken as frames in sorted-name order. Sampling
is uniform and index-based, so re-extraction of the same input yields the
same frames.
"""

from __future__ import annotations

import os

import cv2
import numpy as np

_IMAGE_EXTS = {".png", ".jpg", ".jpeg", ".bmp", ".webp"}


class DecodeError(Exception):
    """Raised when a video cannot be opened or yields no frames."""


def _sample_indices(total: int, wanted: int) -> list[int]:
    if wanted >= total:
        return list(range(total))
    return [(i * total) // wanted for i in range(wanted)]


def _load_frame_dir(path: str) -> list[str]:
    names = sorted(
        name for name in os.listdir(path)
        if os.path.splitext(name)[1].lower() in _IMAGE_EXTS
    )
    if not names:
        raise DecodeError(f"{path}: directory contains no image frames")
    return [os.path.join(path, name) for name in names]


def decode_frames(path: str, frame_count: int | None = None, fps: float | None = None) -> list[np.ndarray]:
    """Decode uniformly sampled BGR frames from a file or frame directory.

    Exactly one of ``frame_count`` (fixed number of frames) or ``fps``
    (frames per second of source time) picks the sampling density.
    """
    if (frame_count is None) == (fps is None):
        raise ValueError("give exactly one of frame_count or fps")
    if not os.path.exists(path):
        raise DecodeError(f"{path}: no such file or directory")

    if os.path.isdir(path):
        files = _load_frame_dir(path)
        wanted = frame_count if frame_count is not None else max(1, round(len(files) * fps))
        frames = []
        for idx in _sample_indices(len(files), wanted):
            frame = cv2.imread(files[idx], cv2.IMREAD_COLOR)
            if frame is None:
                raise DecodeError(f"{files[idx]}: unreadable image frame")
            frames.append(frame)
        return frames

    cap = cv2.VideoCapture(path)
    if not cap.isOpened():
        raise DecodeError(f"{path}: cannot open video")
    try:
        total = int(cap.get(cv2.CAP_PROP_FRAME_COUNT))
        if total <= 0:
            raise DecodeError(f"{path}: no decodable frames")
        if frame_count is not None:
            wanted = frame_count
        else:
            src_fps = cap.get(cv2.CAP_PROP_FPS) or 0.0
            duration = total / src_fps if src_fps > 0 else 0.0
            wanted = max(1, round(duration * fps)) if duration > 0 else total
        frames = []
        for idx in _sample_indices(total, wanted):
            cap.set(cv2.CAP_PROP_POS_FRAMES, idx)
            ok, frame = cap.read()
            if not ok:
                raise DecodeError(f"{path}: failed to read frame {idx}")
            frames.append(frame)
    finally:
        cap.release()
    if not frames:
        raise DecodeError(f"{path}: no frames sampled")
    return frames
