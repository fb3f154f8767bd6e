"""Fixtures: tiny synthetic videos and caption manifests."""

import json
import shutil
import subprocess
import sys

import cv2
import numpy as np
import pytest


def make_avi(path, n_frames=12, size=48, seed=0):
    """Write a small MJPG clip with per-frame deterministic content."""
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"MJPG"), 6.0, (size, size))
    if not writer.isOpened():
        pytest.skip("OpenCV cannot write MJPG in this environment")
    rng = np.random.default_rng(seed)
    for i in range(n_frames):
        frame = np.full((size, size, 3), (10 * i) % 255, dtype=np.uint8)
        frame[:, : size // 2, 0] = rng.integers(0, 255)
        writer.write(frame)
    writer.release()
    return path


@pytest.fixture()
def smoke_set(tmp_path):
    """Three videos, their manifest, and a matching caption manifest."""
    paths = [make_avi(tmp_path / f"clip{i}.avi", n_frames=8 + 4 * i, seed=i) for i in range(3)]
    video_manifest = tmp_path / "videos.jsonl"
    with open(video_manifest, "w", encoding="utf-8") as fh:
        for i, path in enumerate(paths):
            fh.write(json.dumps({"video_id": f"v{i}", "path": str(path)}) + "\n")
    caption_manifest = tmp_path / "captions.jsonl"
    with open(caption_manifest, "w", encoding="utf-8") as fh:
        for i in range(3):
            fh.write(json.dumps({"query_id": f"q{i}", "text": f"clip number {i}", "video_id": f"v{i}"}) + "\n")
    return {"dir": tmp_path, "videos": video_manifest, "captions": caption_manifest, "clips": paths}


def run_framesift(*args):
    """Invoke the retrieval engine CLI (the cross-package interface)."""
    exe = shutil.which("framesift")
    if exe:
        cmd = [exe, *args]
    else:
        cmd = [sys.executable, "-c", "from framesift.cli import main_entry; main_entry()", *args]
    return subprocess.run(cmd, capture_output=True, text=True)
