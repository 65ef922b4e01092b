"""Contrastive training of a linear projection head over frozen base
embeddings.

Each aligned pair (s_i, t_i) is a positive; negatives for s_i are the
window of target sentences around t_i plus random target sentences drawn
corpus-wide. The objective is a multiple-negatives ranking loss

    -(1/K) * sum_i [ sim(s_i, t_i) - log sum_j exp(sim(s_i, t_j-)) ]

with similarity = scale * cosine of the projected, re-normalized vectors.
The positive can optionally join the log-sum-exp (the bounded softmax
variant); the default keeps the literal unbounded form. Gradients are
analytic, backpropagated through the row normalization, and checked against
central finite differences in the tests.

The optimizer is plain SGD with momentum: the point here is hand-verifiable
gradients, and adaptive optimizers would add state without adding coverage.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingMatrix

CHECKPOINT_MAGIC = b"BTXPROJ1"
_CKPT_HEADER = struct.Struct("<IIfB")
_DEGENERATE_NORM = 1e-12


class DegenerateRowError(RuntimeError):
    """A projected row collapsed below norm 1e-12 and cannot be normalized."""

    def __init__(self, side: str, row: int):
        super().__init__(f"projected {side} row {row} has near-zero norm")
        self.side = side
        self.row = row


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite loss {loss} at epoch {epoch}")
        self.epoch = epoch


@dataclass
class ProjectionModel:
    """Linear map from base embedding space to the projected space."""

    weight: np.ndarray  # (out_dim, in_dim)
    scale: float = 1.0
    include_positive: bool = False

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        if self.weight.ndim != 2 or min(self.weight.shape) < 1:
            raise ValueError(f"weight must be a 2-D matrix, got shape {self.weight.shape}")
        if not np.all(np.isfinite(self.weight)):
            raise ValueError("weight contains non-finite entries")
        if self.scale < 0:
            raise ValueError("scale must be non-negative")

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]


def init_model(
    in_dim: int,
    out_dim: int = 256,
    seed: int = 0,
    scale: float = 1.0,
    include_positive: bool = False,
) -> ProjectionModel:
    """Gaussian init scaled by 1/sqrt(in_dim), seeded."""
    rng = np.random.default_rng(seed)
    weight = rng.normal(size=(out_dim, in_dim)) / np.sqrt(in_dim)
    return ProjectionModel(weight=weight, scale=scale, include_positive=include_positive)


@dataclass
class TrainConfig:
    """Negative construction and optimizer settings."""

    window: int = 2  # neighbors of the positive target on each side
    random_negatives: int = 2  # corpus-wide random draws per anchor
    batch_size: int = 32
    lr: float = 0.1
    epochs: int = 5
    seed: int = 0
    momentum: float = 0.9

    def __post_init__(self):
        if self.window < 0 or self.random_negatives < 0:
            raise ValueError("window and random_negatives must be non-negative")
        if 2 * self.window + self.random_negatives < 1:
            raise ValueError("need at least one negative: 2*window + random_negatives >= 1")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")
        if self.lr < 0:
            raise ValueError("lr must be non-negative")
        if not (0.0 <= self.momentum < 1.0):
            raise ValueError("momentum must be in [0, 1)")


@dataclass(frozen=True)
class BatchItem:
    """Anchor source index i (positive is target i) plus negative target indices."""

    anchor: int
    negatives: tuple[int, ...]


ContrastiveBatch = list[BatchItem]


def build_negative_sets(
    n_pairs: int, cfg: TrainConfig, epoch: int = 0
) -> list[ContrastiveBatch]:
    """Per anchor i: in-bounds window {i-W..i+W}\\{i} plus R random targets
    drawn without replacement outside the window, grouped into batches of K.

    Deterministic given (cfg.seed, epoch); the epoch offset is how training
    re-draws fresh random negatives while staying reproducible.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rng = np.random.default_rng([cfg.seed, epoch])
    items: list[BatchItem] = []
    for i in range(n_pairs):
        window = [
            j
            for j in range(i - cfg.window, i + cfg.window + 1)
            if j != i and 0 <= j < n_pairs
        ]
        negatives = list(window)
        if cfg.random_negatives > 0:
            blocked = set(window)
            blocked.add(i)
            pool = np.array([j for j in range(n_pairs) if j not in blocked])
            if pool.size > 0:
                take = min(cfg.random_negatives, pool.size)
                chosen = rng.choice(pool, size=take, replace=False)
                negatives.extend(sorted(int(c) for c in chosen))
        items.append(BatchItem(anchor=i, negatives=tuple(negatives)))
    return [items[p : p + cfg.batch_size] for p in range(0, len(items), cfg.batch_size)]


def _logsumexp(values: np.ndarray) -> float:
    m = float(np.max(values))
    return m + float(np.log(np.sum(np.exp(values - m))))


def mnr_loss(
    pos_sims: list[float],
    neg_sims: list[list[float]],
    include_positive: bool = False,
) -> float:
    """-(1/K) sum_i [pos_i - log sum_j exp(neg_ij)], stabilized by
    max-subtraction; include_positive appends pos_i to the exp-sum."""
    if len(pos_sims) != len(neg_sims):
        raise ValueError("pos_sims and neg_sims must have equal length")
    if len(pos_sims) == 0:
        raise ValueError("empty batch")
    total = 0.0
    for pos, negs in zip(pos_sims, neg_sims):
        if len(negs) == 0:
            raise ValueError("empty negative list")
        pool = list(negs) + ([pos] if include_positive else [])
        total += pos - _logsumexp(np.asarray(pool, dtype=np.float64))
    return -total / len(pos_sims)


def _project_rows(
    rows: np.ndarray, weight: np.ndarray, side: str, row_ids: list[int] | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Project and unit-normalize rows; returns (unit rows, raw norms)."""
    proj = rows @ weight.T
    norms = np.linalg.norm(proj, axis=1)
    bad = np.nonzero(norms < _DEGENERATE_NORM)[0]
    if bad.size > 0:
        first = int(bad[0])
        raise DegenerateRowError(side, row_ids[first] if row_ids else first)
    return proj / norms[:, None], norms


def forward_project(base: EmbeddingMatrix, model: ProjectionModel) -> EmbeddingMatrix:
    """Map every row through the weight and re-normalize, so the cosine of two
    projected rows is their dot product."""
    if not base.normalized:
        raise ValueError("forward_project expects a normalized base matrix")
    if base.dim != model.in_dim:
        raise ValueError(f"dimension mismatch: base dim {base.dim}, model in_dim {model.in_dim}")
    unit, _ = _project_rows(base.as_float64(), model.weight, "input")
    return EmbeddingMatrix(data=unit, normalized=True)


def loss_and_gradient(
    batch: ContrastiveBatch,
    src_base: EmbeddingMatrix,
    tgt_base: EmbeddingMatrix,
    model: ProjectionModel,
) -> tuple[float, np.ndarray]:
    """Batch loss and its analytic gradient with respect to the weight.

    Similarity is scale * dot of the projected-normalized vectors; the
    gradient backpropagates through the normalization:
    d(u/|u|)/du = (I - uu^T/|u|^2) / |u|.
    """
    if not batch:
        raise ValueError("empty batch")
    W = model.weight
    anchors = [it.anchor for it in batch]
    tgt_ids = sorted({it.anchor for it in batch} | {j for it in batch for j in it.negatives})
    col = {idx: c for c, idx in enumerate(tgt_ids)}

    X = src_base.as_float64()[anchors]
    Y = tgt_base.as_float64()[tgt_ids]
    uh, un = _project_rows(X, W, "source", anchors)
    vh, vn = _project_rows(Y, W, "target", tgt_ids)

    sims = model.scale * (uh @ vh.T)  # (K, U)
    K = len(batch)
    G = np.zeros_like(sims)
    total = 0.0
    for r, it in enumerate(batch):
        if len(it.negatives) == 0:
            raise ValueError("empty negative list")
        pos_c = col[it.anchor]
        neg_c = [col[j] for j in it.negatives]
        pool_c = neg_c + ([pos_c] if model.include_positive else [])
        pool = sims[r, pool_c]
        m = float(np.max(pool))
        ex = np.exp(pool - m)
        z = float(np.sum(ex))
        lse = m + float(np.log(z))
        total += sims[r, pos_c] - lse
        p = ex / z  # softmax over the denominator set
        # d(-1/K * [pos - lse]) / d sim
        for c, pc in zip(pool_c, p):
            G[r, c] += pc / K
        G[r, pos_c] -= 1.0 / K
    loss = -total / K

    G_uh = model.scale * (G @ vh)  # dL/d(normalized u)
    G_vh = model.scale * (G.T @ uh)
    G_u = (G_uh - np.sum(G_uh * uh, axis=1, keepdims=True) * uh) / un[:, None]
    G_v = (G_vh - np.sum(G_vh * vh, axis=1, keepdims=True) * vh) / vn[:, None]
    grad = G_u.T @ X + G_v.T @ Y
    return loss, grad


def train_projection(
    pairs: list[tuple[str, str]],
    src_base: EmbeddingMatrix,
    tgt_base: EmbeddingMatrix,
    cfg: TrainConfig,
    model_init: ProjectionModel,
) -> tuple[ProjectionModel, list[float]]:
    """SGD with momentum over epochs; deterministic under cfg.seed.

    Random negatives are re-drawn each epoch from a (seed, epoch)-derived
    stream. Returns the final model and the per-epoch mean loss trace.
    """
    n = len(pairs)
    if n < 2:
        raise ValueError("need at least 2 aligned pairs to train")
    if src_base.count != n or tgt_base.count != n:
        raise ValueError(
            f"pair/embedding length mismatch: {n} pairs, "
            f"{src_base.count} src rows, {tgt_base.count} tgt rows"
        )
    W = model_init.weight.copy()
    vel = np.zeros_like(W)
    trace: list[float] = []
    for epoch in range(cfg.epochs):
        batches = build_negative_sets(n, cfg, epoch=epoch)
        losses = []
        for batch in batches:
            step_model = ProjectionModel(
                weight=W, scale=model_init.scale, include_positive=model_init.include_positive
            )
            loss, grad = loss_and_gradient(batch, src_base, tgt_base, step_model)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, loss)
            vel = cfg.momentum * vel - cfg.lr * grad
            W = W + vel
            losses.append(loss)
        trace.append(float(np.mean(losses)))
    final = ProjectionModel(
        weight=W, scale=model_init.scale, include_positive=model_init.include_positive
    )
    return final, trace


def save_projection(model: ProjectionModel, path: str | Path) -> None:
    """Checkpoint: magic, u32 out_dim, u32 in_dim, f32 scale, u8 flag, f32 weights."""
    payload = np.ascontiguousarray(model.weight, dtype="<f4").tobytes()
    header = _CKPT_HEADER.pack(
        model.out_dim, model.in_dim, model.scale, 1 if model.include_positive else 0
    )
    Path(path).write_bytes(CHECKPOINT_MAGIC + header + payload)


def load_projection(path: str | Path) -> ProjectionModel:
    raw = Path(path).read_bytes()
    if raw[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise ValueError(f"bad checkpoint magic in {path}")
    out_dim, in_dim, scale, flag = _CKPT_HEADER.unpack(
        raw[len(CHECKPOINT_MAGIC) : len(CHECKPOINT_MAGIC) + _CKPT_HEADER.size]
    )
    payload = raw[len(CHECKPOINT_MAGIC) + _CKPT_HEADER.size :]
    expected = out_dim * in_dim * 4
    if len(payload) != expected:
        raise ValueError(f"checkpoint payload is {len(payload)} bytes, expected {expected}")
    weight = np.frombuffer(payload, dtype="<f4").reshape(out_dim, in_dim)
    return ProjectionModel(
        weight=weight.astype(np.float64),
        scale=float(scale),
        include_positive=bool(flag),
    )
