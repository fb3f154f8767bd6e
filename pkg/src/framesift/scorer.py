"""Attention-based frame scorers (inference only).

A small pre-layer-norm transformer encoder runs over the sequence of frame
embeddings (optionally followed by the query token) and a linear head maps
each frame position to a scalar relevance score. Weights are loaded from
the ``VWTS`` named-tensor container; nothing is trained here.

Architecture fixed by convention since only the layer count is externally
specified: pre-LN residual blocks, multi-head attention, feed-forward
expansion 4 with exact (erf) GELU, no final layer norm, positional
encodings optional and off by default.

Container layout (all integers little-endian, tensor payloads raw
little-endian float32, row-major)::

    magic "VWTS" | u32 version=1 | u32 tensor_count
    per tensor: u16 name_len | name UTF-8 | u8 rank | u32 dims[rank] | data

Weight matrices are stored (in, out), applied as ``y = x @ W + b``.
Scalars (the ``meta.*`` entries) are rank-0 tensors holding one value.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .core import FrameMatrix, TextVector
from .errors import (
    BadMagicError,
    DimMismatchError,
    MissingTensorError,
    ShapeMismatchError,
)

MAGIC = b"VWTS"
VERSION = 1

_LN_EPS = 1e-5


@dataclass(frozen=True)
class LayerWeights:
    """One encoder layer: attention projections, two layer norms, feed-forward."""

    wq: np.ndarray
    bq: np.ndarray
    wk: np.ndarray
    bk: np.ndarray
    wv: np.ndarray
    bv: np.ndarray
    wo: np.ndarray
    bo: np.ndarray
    ln1_gamma: np.ndarray
    ln1_beta: np.ndarray
    ln2_gamma: np.ndarray
    ln2_beta: np.ndarray
    ff_w1: np.ndarray
    ff_b1: np.ndarray
    ff_w2: np.ndarray
    ff_b2: np.ndarray


@dataclass(frozen=True)
class ScorerWeights:
    """All parameters of a loaded frame scorer."""

    d: int
    n_heads: int
    n_layers: int
    use_positional: bool
    layers: tuple[LayerWeights, ...]
    head_w: np.ndarray  # (d,)
    head_b: float
    pos_table: np.ndarray | None = None  # (max_len, d) iff use_positional

    def __post_init__(self):
        if self.d < 1 or self.n_heads < 1 or self.n_layers < 1:
            raise ShapeMismatchError("d, head count and layer count must be >= 1")
        if self.d % self.n_heads != 0:
            raise ShapeMismatchError(f"d={self.d} not divisible by {self.n_heads} heads")
        if len(self.layers) != self.n_layers:
            raise ShapeMismatchError(f"{len(self.layers)} layer blocks for n_layers={self.n_layers}")
        if self.use_positional and self.pos_table is None:
            raise MissingTensorError("use_positional set but no positional table")


def _layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray) -> np.ndarray:
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + _LN_EPS) * gamma + beta


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


def _attention(x: np.ndarray, lw: LayerWeights, n_heads: int) -> np.ndarray:
    length, d = x.shape
    dh = d // n_heads
    q = (x @ lw.wq + lw.bq).reshape(length, n_heads, dh).transpose(1, 0, 2)
    k = (x @ lw.wk + lw.bk).reshape(length, n_heads, dh).transpose(1, 0, 2)
    v = (x @ lw.wv + lw.bv).reshape(length, n_heads, dh).transpose(1, 0, 2)
    logits = q @ k.transpose(0, 2, 1) / np.sqrt(dh)
    logits -= logits.max(axis=-1, keepdims=True)
    attn = np.exp(logits)
    attn /= attn.sum(axis=-1, keepdims=True)
    ctx = (attn @ v).transpose(1, 0, 2).reshape(length, d)
    return ctx @ lw.wo + lw.bo


def _encode(tokens: np.ndarray, w: ScorerWeights) -> np.ndarray:
    """Run the encoder stack over a (L, d) float64 token sequence."""
    x = tokens
    if w.use_positional:
        if x.shape[0] > w.pos_table.shape[0]:
            raise ShapeMismatchError(
                f"sequence length {x.shape[0]} exceeds positional table ({w.pos_table.shape[0]})"
            )
        x = x + w.pos_table[: x.shape[0]]
    for lw in w.layers:
        x = x + _attention(_layer_norm(x, lw.ln1_gamma, lw.ln1_beta), lw, w.n_heads)
        h = _gelu(_layer_norm(x, lw.ln2_gamma, lw.ln2_beta) @ lw.ff_w1 + lw.ff_b1)
        x = x + (h @ lw.ff_w2 + lw.ff_b2)
    return x


def _head(x: np.ndarray, w: ScorerWeights) -> np.ndarray:
    return x @ w.head_w + w.head_b


def self_attention_scores(video: FrameMatrix, weights: ScorerWeights) -> np.ndarray:
    """Query-independent per-frame scores from the self-attention scorer.

    Because no query enters the computation, these scores (and hence the
    aggregated video embedding) can be computed once per video and reused
    for every query.
    """
    if video.d != weights.d:
        raise DimMismatchError(f"video dim {video.d} != scorer dim {weights.d}")
    x = _encode(video.frames.astype(np.float64), weights)
    return _head(x, weights)


def joint_attention_scores(
    video: FrameMatrix, query: TextVector, weights: ScorerWeights
) -> np.ndarray:
    """Query-conditioned per-frame scores.

    The query token is appended after the K frame tokens; the head is
    applied to the K frame positions only.
    """
    if video.d != weights.d or query.d != weights.d:
        raise DimMismatchError(
            f"dims disagree: video {video.d}, query {query.d}, scorer {weights.d}"
        )
    tokens = np.vstack([video.frames.astype(np.float64), query.vector.astype(np.float64)])
    x = _encode(tokens, weights)
    return _head(x[: video.k], weights)


# ---------------------------------------------------------------------------
# VWTS container
# ---------------------------------------------------------------------------


def write_tensor_file(path, tensors: dict[str, np.ndarray]) -> None:
    """Write named float32 tensors in the VWTS container format."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(tensors)))
        for name, arr in tensors.items():
            arr = np.asarray(arr, dtype="<f4")  # keeps rank-0 scalars rank 0
            name_b = name.encode("utf-8")
            fh.write(struct.pack("<H", len(name_b)))
            fh.write(name_b)
            fh.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(arr.tobytes())


def read_tensor_file(path) -> dict[str, np.ndarray]:
    """Read a VWTS container back into a name -> float32 array mapping."""
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise BadMagicError(f"{path}: truncated at byte {pos}")
        chunk = data[pos : pos + n]
        pos += n
        return chunk

    if take(4) != MAGIC:
        raise BadMagicError(f"{path}: not a VWTS file")
    version, count = struct.unpack("<II", take(8))
    if version != VERSION:
        raise BadMagicError(f"{path}: unsupported version {version}")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        try:
            name = take(name_len).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise BadMagicError(f"{path}: undecodable tensor name") from exc
        (rank,) = struct.unpack("<B", take(1))
        shape = tuple(struct.unpack("<I", take(4))[0] for _ in range(rank))
        n_values = int(np.prod(shape, dtype=np.int64)) if rank else 1
        raw = take(4 * n_values)
        arr = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
        if name in tensors:
            raise BadMagicError(f"{path}: duplicate tensor {name!r}")
        tensors[name] = arr
    if pos != len(data):
        raise BadMagicError(f"{path}: {len(data) - pos} trailing bytes")
    return tensors


def _layer_tensor_names(i: int) -> list[str]:
    """Names of the required tensors of encoder layer ``i``."""
    prefix = f"layers.{i}"
    return [
        f"{prefix}.attn.q.weight",
        f"{prefix}.attn.q.bias",
        f"{prefix}.attn.k.weight",
        f"{prefix}.attn.k.bias",
        f"{prefix}.attn.v.weight",
        f"{prefix}.attn.v.bias",
        f"{prefix}.attn.out.weight",
        f"{prefix}.attn.out.bias",
        f"{prefix}.ln1.gamma",
        f"{prefix}.ln1.beta",
        f"{prefix}.ln2.gamma",
        f"{prefix}.ln2.beta",
        f"{prefix}.ff.w1",
        f"{prefix}.ff.b1",
        f"{prefix}.ff.w2",
        f"{prefix}.ff.b2",
    ]


def save_scorer_weights(path, weights: ScorerWeights) -> None:
    """Serialize scorer weights to the VWTS container."""
    tensors: dict[str, np.ndarray] = {
        "meta.d": np.float32(weights.d),
        "meta.H": np.float32(weights.n_heads),
        "meta.n_layers": np.float32(weights.n_layers),
        "meta.use_positional": np.float32(1.0 if weights.use_positional else 0.0),
    }
    for i, lw in enumerate(weights.layers):
        tensors[f"layers.{i}.attn.q.weight"] = lw.wq
        tensors[f"layers.{i}.attn.q.bias"] = lw.bq
        tensors[f"layers.{i}.attn.k.weight"] = lw.wk
        tensors[f"layers.{i}.attn.k.bias"] = lw.bk
        tensors[f"layers.{i}.attn.v.weight"] = lw.wv
        tensors[f"layers.{i}.attn.v.bias"] = lw.bv
        tensors[f"layers.{i}.attn.out.weight"] = lw.wo
        tensors[f"layers.{i}.attn.out.bias"] = lw.bo
        tensors[f"layers.{i}.ln1.gamma"] = lw.ln1_gamma
        tensors[f"layers.{i}.ln1.beta"] = lw.ln1_beta
        tensors[f"layers.{i}.ln2.gamma"] = lw.ln2_gamma
        tensors[f"layers.{i}.ln2.beta"] = lw.ln2_beta
        tensors[f"layers.{i}.ff.w1"] = lw.ff_w1
        tensors[f"layers.{i}.ff.b1"] = lw.ff_b1
        tensors[f"layers.{i}.ff.w2"] = lw.ff_w2
        tensors[f"layers.{i}.ff.b2"] = lw.ff_b2
    tensors["head.weight"] = weights.head_w
    tensors["head.bias"] = np.float32(weights.head_b)
    if weights.use_positional:
        tensors["pos.table"] = weights.pos_table
    write_tensor_file(path, tensors)


def load_scorer_weights(path) -> ScorerWeights:
    """Load and shape-check scorer weights from a VWTS container."""
    tensors = read_tensor_file(path)

    def meta(name: str) -> float:
        if name not in tensors:
            raise MissingTensorError(f"{path}: missing {name}")
        return float(tensors[name])

    d = int(meta("meta.d"))
    n_heads = int(meta("meta.H"))
    n_layers = int(meta("meta.n_layers"))
    use_positional = bool(meta("meta.use_positional"))

    expected: dict[str, tuple[int, ...]] = {}
    for i in range(n_layers):
        for name in _layer_tensor_names(i):
            if name.endswith(".weight") and ".attn." in name:
                expected[name] = (d, d)
            elif name.endswith(".bias") and ".attn." in name:
                expected[name] = (d,)
            elif ".ln" in name:
                expected[name] = (d,)
            elif name.endswith("ff.w1"):
                expected[name] = (d, 4 * d)
            elif name.endswith("ff.b1"):
                expected[name] = (4 * d,)
            elif name.endswith("ff.w2"):
                expected[name] = (4 * d, d)
            elif name.endswith("ff.b2"):
                expected[name] = (d,)
    expected["head.weight"] = (d,)
    expected["head.bias"] = ()

    arrays: dict[str, np.ndarray] = {}
    for name, shape in expected.items():
        if name not in tensors:
            raise MissingTensorError(f"{path}: missing {name}")
        arr = tensors[name]
        if arr.shape != shape:
            raise ShapeMismatchError(f"{path}: {name} has shape {arr.shape}, expected {shape}")
        if not np.isfinite(arr).all():
            raise ShapeMismatchError(f"{path}: {name} contains NaN or Inf")
        arrays[name] = arr.astype(np.float64)

    pos_table = None
    if use_positional:
        if "pos.table" not in tensors:
            raise MissingTensorError(f"{path}: missing pos.table")
        pos_table = tensors["pos.table"].astype(np.float64)
        if pos_table.ndim != 2 or pos_table.shape[1] != d:
            raise ShapeMismatchError(f"{path}: pos.table has shape {pos_table.shape}")

    layers = tuple(
        LayerWeights(
            wq=arrays[f"layers.{i}.attn.q.weight"],
            bq=arrays[f"layers.{i}.attn.q.bias"],
            wk=arrays[f"layers.{i}.attn.k.weight"],
            bk=arrays[f"layers.{i}.attn.k.bias"],
            wv=arrays[f"layers.{i}.attn.v.weight"],
            bv=arrays[f"layers.{i}.attn.v.bias"],
            wo=arrays[f"layers.{i}.attn.out.weight"],
            bo=arrays[f"layers.{i}.attn.out.bias"],
            ln1_gamma=arrays[f"layers.{i}.ln1.gamma"],
            ln1_beta=arrays[f"layers.{i}.ln1.beta"],
            ln2_gamma=arrays[f"layers.{i}.ln2.gamma"],
            ln2_beta=arrays[f"layers.{i}.ln2.beta"],
            ff_w1=arrays[f"layers.{i}.ff.w1"],
            ff_b1=arrays[f"layers.{i}.ff.b1"],
            ff_w2=arrays[f"layers.{i}.ff.w2"],
            ff_b2=arrays[f"layers.{i}.ff.b2"],
        )
        for i in range(n_layers)
    )
    return ScorerWeights(
        d=d,
        n_heads=n_heads,
        n_layers=n_layers,
        use_positional=use_positional,
        layers=layers,
        head_w=arrays["head.weight"],
        head_b=float(arrays["head.bias"]),
        pos_table=pos_table,
    )


def random_scorer_weights(
    d: int,
    n_heads: int = 8,
    n_layers: int = 1,
    use_positional: bool = False,
    max_len: int = 512,
    seed: int = 0,
) -> ScorerWeights:
    """Random small-scale scorer weights for tests and demos.

    Initialization is scaled like a freshly initialized transformer so the
    forward pass stays well-conditioned.
    """
    rng = np.random.default_rng(seed)

    def mat(n_in: int, n_out: int) -> np.ndarray:
        return rng.normal(0.0, 1.0 / np.sqrt(n_in), size=(n_in, n_out))

    layers = tuple(
        LayerWeights(
            wq=mat(d, d),
            bq=np.zeros(d),
            wk=mat(d, d),
            bk=np.zeros(d),
            wv=mat(d, d),
            bv=np.zeros(d),
            wo=mat(d, d),
            bo=np.zeros(d),
            ln1_gamma=np.ones(d),
            ln1_beta=np.zeros(d),
            ln2_gamma=np.ones(d),
            ln2_beta=np.zeros(d),
            ff_w1=mat(d, 4 * d),
            ff_b1=np.zeros(4 * d),
            ff_w2=mat(4 * d, d),
            ff_b2=np.zeros(d),
        )
        for _ in range(n_layers)
    )
    return ScorerWeights(
        d=d,
        n_heads=n_heads,
        n_layers=n_layers,
        use_positional=use_positional,
        layers=layers,
        head_w=rng.normal(0.0, 1.0 / np.sqrt(d), size=d),
        head_b=float(rng.normal()),
        pos_table=rng.normal(0.0, 0.02, size=(max_len, d)) if use_positional else None,
    )
