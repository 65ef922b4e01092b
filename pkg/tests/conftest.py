import numpy as np

from bitextmine import EmbeddingMatrix, l2_normalize


def unit_matrix(rng: np.random.Generator, n: int, dim: int) -> EmbeddingMatrix:
    """Random unit-row matrix (float32-backed) for DP/kNN tests."""
    if n == 0:
        return EmbeddingMatrix(np.zeros((0, dim)), normalized=True)
    m, _ = l2_normalize(EmbeddingMatrix(rng.normal(size=(n, dim))))
    return m
