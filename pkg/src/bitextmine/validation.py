"""Input validation helpers shared by the estimator wrappers and the CLI."""

from __future__ import annotations

import numpy as np

from .embeddings import EmbeddingMatrix, l2_normalize


def as_embedding_matrix(X, normalize: bool = False, name: str = "X") -> EmbeddingMatrix:
    """Coerce an array-like or EmbeddingMatrix; optionally l2-normalize.

    Raw arrays are wrapped unnormalized; with ``normalize=True`` the result
    is always unit-row (already-normalized inputs pass through untouched).
    """
    if isinstance(X, EmbeddingMatrix):
        m = X
    else:
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name} contains non-finite values")
        m = EmbeddingMatrix(data=arr, normalized=False)
    if normalize and not m.normalized:
        m, _ = l2_normalize(m)
    return m


def check_same_dim(a: EmbeddingMatrix, b: EmbeddingMatrix, names=("src", "tgt")) -> None:
    if a.dim != b.dim:
        raise ValueError(f"{names[0]} dim {a.dim} != {names[1]} dim {b.dim}")


def check_bitext(pairs, name: str = "bitext") -> list[tuple[str, str]]:
    out = []
    for i, p in enumerate(pairs):
        if len(p) != 2:
            raise ValueError(f"{name}[{i}] must be a (src, tgt) pair")
        out.append((str(p[0]), str(p[1])))
    return out
