"""framesift-extract: data on-ramp for the framesift retrieval engine.

Decodes videos (or frame directories), encodes sampled frames and caption
texts with an image-text model, and writes the engine's ``.vemb`` stores
and ground-truth manifests.
"""

from .encoders import EncoderError, get_encoder
from .extract import (
    ExtractionJob,
    ExtractionResult,
    ManifestError,
    extract_text_embeddings,
    extract_video_embeddings,
)
from .vemb import VembWriteError, write_vemb
from .video import DecodeError, decode_frames

__version__ = "0.1.0"

__all__ = [
    "DecodeError",
    "EncoderError",
    "ExtractionJob",
    "ExtractionResult",
    "ManifestError",
    "VembWriteError",
    "decode_frames",
    "extract_text_embeddings",
    "extract_video_embeddings",
    "get_encoder",
    "write_vemb",
]
