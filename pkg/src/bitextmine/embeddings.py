"""Embedding container, binary file I/O, and the vector primitives shared by
the aligner and the filter.

File format (bit-exact): magic ``BTXEMB1\\n`` (8 bytes), row count as u32
little-endian, dimension as u32 little-endian, then count x dim IEEE-754
float32 little-endian values in row-major order. Row i corresponds to line i
(0-based) of the companion UTF-8, LF-terminated sentence file.

Values are stored as float32; dot products and means accumulate in float64
before rounding back, so files stay compact while sums stay stable.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"BTXEMB1\n"
_HEADER = struct.Struct("<II")


class EmbeddingFormatError(ValueError):
    """Raised when an embedding file violates the binary format.

    ``field`` names the offending part of the file (magic, dim, payload...).
    """

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Dense float32 sentence embeddings, one row per sentence.

    Immutable after construction (the underlying array is write-protected),
    so instances are safe to share across workers.
    """

    data: np.ndarray
    normalized: bool = False
    zero_rows: int = field(default=0, compare=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"embedding data must be 2-D, got shape {arr.shape}")
        if arr.shape[1] < 1:
            raise ValueError("embedding dimension must be >= 1")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.data[i]

    def as_float64(self) -> np.ndarray:
        return self.data.astype(np.float64)


def load_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Read an embedding file; returns an unnormalized matrix.

    Raises EmbeddingFormatError on bad magic, zero dimension, or a payload
    whose byte length does not equal count x dim x 4.
    """
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise EmbeddingFormatError("magic", f"expected {MAGIC!r} at start of {path}")
    header = raw[len(MAGIC) : len(MAGIC) + _HEADER.size]
    if len(header) < _HEADER.size:
        raise EmbeddingFormatError("header", f"truncated header in {path}")
    count, dim = _HEADER.unpack(header)
    if dim == 0:
        raise EmbeddingFormatError("dim", f"dimension is 0 in {path}")
    payload = raw[len(MAGIC) + _HEADER.size :]
    expected = count * dim * 4
    if len(payload) != expected:
        raise EmbeddingFormatError(
            "payload", f"{path} carries {len(payload)} payload bytes, expected {expected}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    return EmbeddingMatrix(data=data, normalized=False)


def save_embeddings(m: EmbeddingMatrix, path: str | Path) -> None:
    """Write a matrix in the binary format; load_embeddings round-trips bit-exactly."""
    out = Path(path)
    payload = np.ascontiguousarray(m.data, dtype="<f4").tobytes()
    out.write_bytes(MAGIC + _HEADER.pack(m.count, m.dim) + payload)


def l2_normalize(m: EmbeddingMatrix) -> tuple[EmbeddingMatrix, int]:
    """Scale each row to unit Euclidean norm.

    All-zero rows pass through unchanged and are counted instead of raising:
    crawled corpora contain empty lines and the pipeline must not abort.
    Returns (normalized matrix, number of zero rows).
    """
    data = m.as_float64()
    norms = np.linalg.norm(data, axis=1)
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    out = data / safe[:, None]
    return (
        EmbeddingMatrix(data=out, normalized=True, zero_rows=int(zero.sum())),
        int(zero.sum()),
    )


def cosine(u, v) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1].

    Accumulates in float64. Raises ValueError for a zero vector.
    """
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for a zero vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def validate_block(indices: tuple[int, ...], n: int) -> None:
    """Check an index block: non-empty, strictly increasing, contiguous, in bounds."""
    if len(indices) == 0:
        raise ValueError("index block is empty")
    for prev, cur in zip(indices, indices[1:]):
        if cur != prev + 1:
            raise ValueError(f"index block {indices} is not a contiguous run")
    if indices[0] < 0 or indices[-1] >= n:
        raise ValueError(f"index block {indices} out of bounds for document of {n}")


def block_embed(m: EmbeddingMatrix, indices: tuple[int, ...]) -> np.ndarray:
    """Mean of the block's rows, re-normalized to unit length (float64).

    The matrix must be normalized; a zero mean yields the zero vector.
    """
    if not m.normalized:
        raise ValueError("block_embed requires a normalized matrix")
    validate_block(tuple(indices), m.count)
    mean = m.data[list(indices)].astype(np.float64).mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0.0:
        return mean
    return mean / norm
