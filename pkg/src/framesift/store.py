"""Durable data layer: the ``.vemb`` embedding store and ground-truth manifests.

``.vemb`` is a sequential single-pass binary format (all integers
little-endian, values little-endian row-major)::

    magic "VEMB" | u32 version=1 | u8 dtype (0=f32, 1=f16) | u32 d | u64 entry_count
    per entry: u32 id_len | id UTF-8 | u32 K | K*d values

Query stores use the same format with K=1 per entry. Files hold raw
extractor output; normalization happens when embeddings enter the engine,
so an f32 file round-trips bit-exactly. f16 is a storage option only --
the engine computes in f32 or wider either way.

Ground-truth manifests are UTF-8 JSON lines, either retrieval pairs
(``{"query_id": ..., "video_id": ...}``) or multilabel records
(``{"video_id": ..., "labels": [...]}``). Unknown fields are ignored.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagicError,
    DimMismatchError,
    DuplicateIdError,
    ManifestParseError,
    NonFiniteError,
    ZeroFramesError,
)

MAGIC = b"VEMB"
VERSION = 1

_DTYPE_CODE = {"f32": 0, "f16": 1}
_CODE_DTYPE = {0: "f32", 1: "f16"}
_DTYPE_NP = {"f32": "<f4", "f16": "<f2"}
DTYPE_SIZE = {"f32": 4, "f16": 2}

HEADER_SIZE = 4 + 4 + 1 + 4 + 8
ENTRY_OVERHEAD = 4 + 4  # id length + frame count


@dataclass
class EmbeddingStore:
    """An ordered collection of (id, K x d matrix) embedding entries."""

    dtype: str  # "f32" or "f16" -- the on-disk value type
    d: int
    entries: list[tuple[str, np.ndarray]] = field(default_factory=list)

    def validate(self) -> None:
        if self.dtype not in _DTYPE_CODE:
            raise ValueError(f"unknown dtype {self.dtype!r}")
        if self.d < 1:
            raise DimMismatchError(f"dimension must be >= 1, got {self.d}")
        seen: set[str] = set()
        for entry_id, mat in self.entries:
            if entry_id in seen:
                raise DuplicateIdError(f"duplicate id {entry_id!r}")
            seen.add(entry_id)
            if mat.ndim != 2:
                raise ValueError(f"entry {entry_id!r}: matrix must be 2-D")
            if mat.shape[0] < 1:
                raise ZeroFramesError(f"entry {entry_id!r} has zero frames")
            if mat.shape[1] != self.d:
                raise DimMismatchError(
                    f"entry {entry_id!r} has dim {mat.shape[1]}, store dim is {self.d}"
                )
            if not np.isfinite(mat).all():
                raise NonFiniteError(f"entry {entry_id!r} contains NaN or Inf")

    def ids(self) -> list[str]:
        return [entry_id for entry_id, _ in self.entries]

    def file_bytes(self) -> int:
        """Exact size of this store when serialized."""
        size = HEADER_SIZE
        item = DTYPE_SIZE[self.dtype]
        for entry_id, mat in self.entries:
            size += len(entry_id.encode("utf-8")) + ENTRY_OVERHEAD + mat.shape[0] * self.d * item
        return size


def write_store(store: EmbeddingStore, path) -> None:
    """Serialize a validated store to ``path``."""
    store.validate()
    np_dtype = _DTYPE_NP[store.dtype]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IBIQ", VERSION, _DTYPE_CODE[store.dtype], store.d, len(store.entries)))
        for entry_id, mat in store.entries:
            id_b = entry_id.encode("utf-8")
            fh.write(struct.pack("<I", len(id_b)))
            fh.write(id_b)
            fh.write(struct.pack("<I", mat.shape[0]))
            fh.write(np.ascontiguousarray(mat, dtype=np_dtype).tobytes())


def read_store(path) -> EmbeddingStore:
    """Parse and validate a ``.vemb`` file.

    Corrupt input of any kind raises a FramesiftError subclass; it never
    produces a store that violates the type invariants.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0

    def take(n: int) -> bytes:
        nonlocal pos
        if n < 0 or pos + n > len(data):
            raise BadMagicError(f"{path}: truncated at byte {pos}")
        chunk = data[pos : pos + n]
        pos += n
        return chunk

    if take(4) != MAGIC:
        raise BadMagicError(f"{path}: not a .vemb file")
    version, dtype_code, d, count = struct.unpack("<IBIQ", take(17))
    if version != VERSION:
        raise BadMagicError(f"{path}: unsupported version {version}")
    if dtype_code not in _CODE_DTYPE:
        raise BadMagicError(f"{path}: unknown dtype code {dtype_code}")
    dtype = _CODE_DTYPE[dtype_code]
    if d < 1:
        raise DimMismatchError(f"{path}: dimension must be >= 1, got {d}")

    item = DTYPE_SIZE[dtype]
    entries: list[tuple[str, np.ndarray]] = []
    seen: set[str] = set()
    for _ in range(count):
        (id_len,) = struct.unpack("<I", take(4))
        try:
            entry_id = take(id_len).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise BadMagicError(f"{path}: undecodable entry id") from exc
        (k,) = struct.unpack("<I", take(4))
        if k == 0:
            raise ZeroFramesError(f"{path}: entry {entry_id!r} has zero frames")
        raw = take(k * d * item)
        mat = np.frombuffer(raw, dtype=_DTYPE_NP[dtype]).reshape(k, d)
        mat = mat.astype(np.float32)
        if not np.isfinite(mat).all():
            raise NonFiniteError(f"{path}: entry {entry_id!r} contains NaN or Inf")
        if entry_id in seen:
            raise DuplicateIdError(f"{path}: duplicate id {entry_id!r}")
        seen.add(entry_id)
        entries.append((entry_id, mat))
    if pos != len(data):
        raise BadMagicError(f"{path}: {len(data) - pos} trailing bytes")
    return EmbeddingStore(dtype=dtype, d=d, entries=entries)


@dataclass(frozen=True)
class GroundTruth:
    """Parsed ground-truth manifest.

    ``retrieval`` maps query id to its relevant video id; ``labels`` maps
    video id to its set of class indices. A manifest normally contains
    one kind of record, but mixed files parse fine.
    """

    retrieval: dict[str, str]
    labels: dict[str, frozenset[int]]

    @property
    def n_records(self) -> int:
        return len(self.retrieval) + len(self.labels)


def load_ground_truth(path) -> GroundTruth:
    """Parse a JSON-lines ground-truth manifest.

    Malformed lines raise ManifestParseError carrying the 1-based line
    number; unknown fields are tolerated and ignored.
    """
    retrieval: dict[str, str] = {}
    labels: dict[str, frozenset[int]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestParseError(line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise ManifestParseError(line_no, "record is not an object")
            if "query_id" in record:
                qid, vid = record.get("query_id"), record.get("video_id")
                if not isinstance(qid, str) or not isinstance(vid, str):
                    raise ManifestParseError(line_no, "query_id and video_id must be strings")
                if qid in retrieval:
                    raise ManifestParseError(line_no, f"duplicate query_id {qid!r}")
                retrieval[qid] = vid
            elif "labels" in record:
                vid, raw = record.get("video_id"), record.get("labels")
                if not isinstance(vid, str):
                    raise ManifestParseError(line_no, "video_id must be a string")
                if not isinstance(raw, list) or not all(
                    isinstance(c, int) and not isinstance(c, bool) and c >= 0 for c in raw
                ):
                    raise ManifestParseError(line_no, "labels must be a list of non-negative ints")
                if vid in labels:
                    raise ManifestParseError(line_no, f"duplicate video_id {vid!r}")
                labels[vid] = frozenset(raw)
            else:
                raise ManifestParseError(line_no, "record has neither query_id nor labels")
    if not retrieval and not labels:
        raise ManifestParseError(0, "manifest contains no records")
    return GroundTruth(retrieval=retrieval, labels=labels)
