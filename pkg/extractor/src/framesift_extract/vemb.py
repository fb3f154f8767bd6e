"""Writer for the ``.vemb`` embedding store wire format.

This is the contract between the extractor and the retrieval engine; the
layout must match the engine's reader bit for bit (all integers
little-endian, values little-endian row-major)::

    magic "VEMB" | u32 version=1 | u8 dtype (0=f32, 1=f16) | u32 d | u64 entry_count
    per entry: u32 id_len | id UTF-8 | u32 K | K*d values

Embeddings are written raw (un-normalized); normalization is the
engine's job at load time.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"VEMB"
VERSION = 1

_DTYPE_CODE = {"f32": 0, "f16": 1}
_DTYPE_NP = {"f32": "<f4", "f16": "<f2"}


class VembWriteError(Exception):
    """Raised when entries cannot form a valid store."""


def write_vemb(path, entries: list[tuple[str, np.ndarray]], d: int, dtype: str = "f32") -> None:
    """Write (id, K x d matrix) entries as a ``.vemb`` store."""
    if dtype not in _DTYPE_CODE:
        raise VembWriteError(f"unknown dtype {dtype!r}")
    if d < 1:
        raise VembWriteError(f"dimension must be >= 1, got {d}")
    seen: set[str] = set()
    for entry_id, mat in entries:
        if entry_id in seen:
            raise VembWriteError(f"duplicate id {entry_id!r}")
        seen.add(entry_id)
        if mat.ndim != 2 or mat.shape[1] != d:
            raise VembWriteError(f"entry {entry_id!r}: expected (K, {d}) matrix, got {mat.shape}")
        if mat.shape[0] < 1:
            raise VembWriteError(f"entry {entry_id!r} has zero frames")
        if not np.isfinite(mat).all():
            raise VembWriteError(f"entry {entry_id!r} contains NaN or Inf")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IBIQ", VERSION, _DTYPE_CODE[dtype], d, len(entries)))
        for entry_id, mat in entries:
            id_b = entry_id.encode("utf-8")
            fh.write(struct.pack("<I", len(id_b)))
            fh.write(id_b)
            fh.write(struct.pack("<I", mat.shape[0]))
            fh.write(np.ascontiguousarray(mat, dtype=_DTYPE_NP[dtype]).tobytes())
