"""Image/text encoders behind a common interface.

``clip-vit-b16`` wraps the pretrained image-text model the engine's
embeddings normally come from (needs torch + transformers and downloaded
weights). The ``hashed-*`` encoders are deterministic stand-ins for
offline smoke tests and wiring checks: same input, same bytes, every
time, with no model downloads.

All encoders emit raw float32 embeddings; the engine normalizes at load.
"""

from __future__ import annotations

import hashlib

import cv2
import numpy as np


class EncoderError(Exception):
    """Raised when a model id is unknown or its backend is unavailable."""


class HashedEncoder:
    """Content-hash encoder: cheap, deterministic, download-free.

    Images are reduced to a 16x16 grayscale patch grid and pushed through
    a fixed random projection; texts seed a generator from their digest.
    Useful for pipeline tests, not for semantic retrieval quality.
    """

    _GRID = 16

    def __init__(self, d: int):
        self.d = d
        # fixed projection shared by every call; seeded by d only
        rng = np.random.default_rng(d * 7919 + 17)
        self._projection = rng.standard_normal((self._GRID * self._GRID, d)).astype(np.float32)

    def encode_images(self, frames: list[np.ndarray]) -> np.ndarray:
        out = np.empty((len(frames), self.d), dtype=np.float32)
        for i, frame in enumerate(frames):
            gray = cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY) if frame.ndim == 3 else frame
            patch = cv2.resize(gray, (self._GRID, self._GRID), interpolation=cv2.INTER_AREA)
            flat = patch.astype(np.float32).ravel() / 255.0
            out[i] = flat @ self._projection
        return out

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        out = np.empty((len(texts), self.d), dtype=np.float32)
        for i, text in enumerate(texts):
            digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            out[i] = rng.standard_normal(self.d).astype(np.float32)
        return out


class ClipEncoder:
    """Pretrained image-text encoder (ViT-B/16 by default)."""

    def __init__(self, model_name: str = "openai/clip-vit-base-patch16"):
        try:
            import torch  # noqa: F401
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise EncoderError(
                "clip encoder needs the optional [clip] dependencies (torch, transformers)"
            ) from exc
        try:
            self._model = CLIPModel.from_pretrained(model_name)
        except Exception as exc:  # typically: weights not downloadable offline
            raise EncoderError(f"could not load {model_name}: {exc}") from exc
        self._model.eval()
        self._processor = CLIPProcessor.from_pretrained(model_name)
        self.d = int(self._model.config.projection_dim)

    def encode_images(self, frames: list[np.ndarray]) -> np.ndarray:
        import torch

        rgb = [cv2.cvtColor(f, cv2.COLOR_BGR2RGB) for f in frames]
        inputs = self._processor(images=rgb, return_tensors="pt")
        with torch.no_grad():
            feats = self._model.get_image_features(**inputs)
        return feats.cpu().numpy().astype(np.float32)

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        import torch

        inputs = self._processor(text=texts, return_tensors="pt", padding=True, truncation=True)
        with torch.no_grad():
            feats = self._model.get_text_features(**inputs)
        return feats.cpu().numpy().astype(np.float32)


def get_encoder(model_id: str):
    """Resolve a model identifier to an encoder instance."""
    if model_id == "clip-vit-b16":
        return ClipEncoder()
    if model_id.startswith("hashed-"):
        try:
            d = int(model_id.removeprefix("hashed-"))
        except ValueError:
            raise EncoderError(f"bad hashed encoder id {model_id!r} (expected hashed-<dim>)") from None
        if d < 1:
            raise EncoderError(f"bad hashed encoder dimension {d}")
        return HashedEncoder(d)
    raise EncoderError(f"unknown model id {model_id!r} (try clip-vit-b16 or hashed-<dim>)")
