"""Synthetic corpora with planted ground truth, plus the alignment-F1 and
ranking-AUC metrics used to judge the aligner and filter at desk scale.

Two vector constructions back the generators:

- exact axis mode (used when dim affords two fresh axes per unit): every
  base direction is a distinct signed coordinate axis, so cross cosines of
  unrelated rows are exactly zero;
- Gaussian mode (for long documents where axis mode would need huge dims):
  random unit vectors, with noise rows rejection-re-drawn until they stay
  far enough from every other base that all derived cross cosines are
  bounded by the requested noise ceiling. Retry exhaustion means the
  dimension is too small to guarantee the cosine gap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .align import Alignment, Link
from .embeddings import EmbeddingMatrix


class InfeasibleSpecError(ValueError):
    """The requested dimension cannot guarantee the clean/noise cosine gap."""


@dataclass
class SyntheticSpec:
    n_pairs: int
    dim: int
    clean_cos_min: float = 0.9
    noise_cos_max: float = 0.3
    insert_rate: float = 0.0
    merge_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_pairs < 0:
            raise ValueError("n_pairs must be non-negative")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if not (self.clean_cos_min > self.noise_cos_max):
            raise ValueError("clean_cos_min must exceed noise_cos_max")
        if self.insert_rate < 0 or self.merge_rate < 0:
            raise ValueError("rates must be non-negative")
        if self.insert_rate + self.merge_rate >= 1.0:
            raise ValueError("insert_rate + merge_rate must stay below 1")


@dataclass
class SyntheticCorpus:
    """A generated document pair with its gold alignment and link labels
    (1 = matched link, 0 = null link over an inserted noise sentence)."""

    src_sentences: list[str]
    tgt_sentences: list[str]
    gold: Alignment
    src_embs: EmbeddingMatrix
    tgt_embs: EmbeddingMatrix
    labels: list[int] = field(default_factory=list)


class _VectorFactory:
    """Unit-vector source for the generators; see the module docstring."""

    _NOISE_RETRIES = 500

    def __init__(self, rng: np.random.Generator, dim: int, n_axes_needed: int):
        self.rng = rng
        self.dim = dim
        self.axis_mode = dim >= n_axes_needed
        if self.axis_mode:
            self._axes = rng.permutation(dim)[:n_axes_needed]
            self._signs = rng.choice([-1.0, 1.0], size=n_axes_needed)
            self._next = 0
        else:
            self._bases = np.zeros((max(16, n_axes_needed), dim))
            self._n_bases = 0

    def _fresh_axis(self) -> np.ndarray:
        v = np.zeros(self.dim)
        v[self._axes[self._next]] = self._signs[self._next]
        self._next += 1
        return v

    def _random_unit(self) -> np.ndarray:
        v = self.rng.normal(size=self.dim)
        return v / np.linalg.norm(v)

    def _remember(self, v: np.ndarray) -> np.ndarray:
        if self._n_bases == self._bases.shape[0]:
            self._bases = np.vstack([self._bases, np.zeros_like(self._bases)])
        self._bases[self._n_bases] = v
        self._n_bases += 1
        return v

    def base_unit(self) -> np.ndarray:
        """A fresh direction for matched content (unconstrained in Gaussian mode)."""
        if self.axis_mode:
            return self._fresh_axis()
        return self._remember(self._random_unit())

    def noise_unit(self, ceiling: float) -> np.ndarray:
        """A direction provably far from every existing base.

        The rejection threshold is ceiling/2 because derived rows are unit
        combinations of at most two bases, which can amplify a base cosine
        by up to ~sqrt(2) (plus slack for imperfect orthogonality).
        """
        if self.axis_mode:
            return self._fresh_axis()
        threshold = ceiling / 2.0
        for _ in range(self._NOISE_RETRIES):
            v = self._random_unit()
            seen = self._bases[: self._n_bases]
            if seen.shape[0] == 0 or float(np.max(np.abs(seen @ v))) <= threshold:
                return self._remember(v)
        raise InfeasibleSpecError(
            f"dim {self.dim} is too small to guarantee cross-cosine <= {ceiling}"
        )


def gen_synthetic(spec: SyntheticSpec) -> SyntheticCorpus:
    """Generate a document pair: matched unit-vector pairs with cosine >=
    clean_cos_min, paired noise inserts (one extra sentence each side, gold
    null links) at insert_rate, and 2-1 merges (target row = normalized mean
    of two source rows) at merge_rate. Deterministic given spec.seed.
    """
    rng = np.random.default_rng(spec.seed)

    # Unit plan first, so the axis budget is known before any vector draws.
    kinds: list[str] = []
    for _ in range(spec.n_pairs):
        if rng.random() < spec.insert_rate:
            kinds.append("insert")
        kinds.append("merge" if rng.random() < spec.merge_rate else "plain")
    n_inserts = sum(1 for k in kinds if k == "insert")
    factory = _VectorFactory(rng, spec.dim, 2 * (spec.n_pairs + n_inserts))

    # Matched/merge vectors first, noise afterwards: Gaussian-mode rejection
    # must see every base the noise rows have to stay away from.
    rho_hi = max(min(0.99, spec.clean_cos_min + 0.09), spec.clean_cos_min + 1e-4)
    plans: list[tuple] = []
    for kind in kinds:
        if kind == "plain":
            x = factory.base_unit()
            w = factory.base_unit()
            if not factory.axis_mode:
                w = w - (w @ x) * x
                w = w / np.linalg.norm(w)
            rho = rng.uniform(spec.clean_cos_min + 1e-4, rho_hi)
            y = rho * x + np.sqrt(1.0 - rho * rho) * w
            plans.append(("plain", [x], [y / np.linalg.norm(y)]))
        elif kind == "merge":
            a = factory.base_unit()
            b = factory.base_unit()
            mean = (a + b) / 2.0
            plans.append(("merge", [a, b], [mean / np.linalg.norm(mean)]))
        else:
            plans.append(("insert", None, None))
    for idx, (kind, _, _) in enumerate(plans):
        if kind == "insert":
            sx = factory.noise_unit(spec.noise_cos_max)
            tx = factory.noise_unit(spec.noise_cos_max)
            plans[idx] = ("insert", [sx], [tx])

    src_rows: list[np.ndarray] = []
    tgt_rows: list[np.ndarray] = []
    links: list[Link] = []
    labels: list[int] = []
    for kind, svecs, tvecs in plans:
        s0, t0 = len(src_rows), len(tgt_rows)
        src_rows.extend(svecs)
        tgt_rows.extend(tvecs)
        if kind == "insert":
            links.append(Link((s0,), (), 0.0))
            labels.append(0)
            links.append(Link((), (t0,), 0.0))
            labels.append(0)
        elif kind == "merge":
            links.append(Link((s0, s0 + 1), (t0,), 0.0))
            labels.append(1)
        else:
            links.append(Link((s0,), (t0,), 0.0))
            labels.append(1)

    dim = spec.dim
    src_arr = np.array(src_rows) if src_rows else np.zeros((0, dim))
    tgt_arr = np.array(tgt_rows) if tgt_rows else np.zeros((0, dim))
    return SyntheticCorpus(
        src_sentences=[f"s{i}" for i in range(len(src_rows))],
        tgt_sentences=[f"t{j}" for j in range(len(tgt_rows))],
        gold=Alignment(links),
        src_embs=EmbeddingMatrix(data=src_arr, normalized=True),
        tgt_embs=EmbeddingMatrix(data=tgt_arr, normalized=True),
        labels=labels,
    )


def labeled_pair_corpus(
    n_clean: int,
    n_noise: int,
    dim: int,
    clean_cos_min: float = 0.9,
    noise_cos_max: float = 0.3,
    seed: int = 0,
) -> tuple[list[tuple[str, str]], EmbeddingMatrix, EmbeddingMatrix, list[int]]:
    """Row-paired corpus for filter evaluation: n_clean translation pairs
    (pair cosine >= clean_cos_min) and n_noise mismatched pairs (all cross
    cosines <= noise_cos_max), shuffled, with 1/0 labels."""
    if clean_cos_min <= noise_cos_max:
        raise ValueError("clean_cos_min must exceed noise_cos_max")
    rng = np.random.default_rng(seed)
    factory = _VectorFactory(rng, dim, 2 * (n_clean + n_noise))
    src_rows, tgt_rows, labels = [], [], []
    for _ in range(n_clean):
        x = factory.base_unit()
        w = factory.base_unit()
        if not factory.axis_mode:
            w = w - (w @ x) * x
            w = w / np.linalg.norm(w)
        rho = rng.uniform(clean_cos_min + 1e-4, max(0.99, clean_cos_min + 1e-3))
        y = rho * x + np.sqrt(1.0 - rho * rho) * w
        src_rows.append(x)
        tgt_rows.append(y / np.linalg.norm(y))
        labels.append(1)
    for _ in range(n_noise):
        src_rows.append(factory.noise_unit(noise_cos_max))
        tgt_rows.append(factory.noise_unit(noise_cos_max))
        labels.append(0)
    order = rng.permutation(len(labels))
    src_rows = [src_rows[i] for i in order]
    tgt_rows = [tgt_rows[i] for i in order]
    labels = [labels[i] for i in order]
    pairs = [(f"s{i}", f"t{i}") for i in range(len(labels))]
    return (
        pairs,
        EmbeddingMatrix(data=np.array(src_rows), normalized=True),
        EmbeddingMatrix(data=np.array(tgt_rows), normalized=True),
        labels,
    )


def gold_pair_set(corpus: SyntheticCorpus) -> set[tuple[str, str]]:
    """Extracted text pairs of the gold non-null links (blocks joined by a
    single space, matching the pipeline's extraction convention)."""
    out = set()
    for l in corpus.gold.non_null():
        src = " ".join(corpus.src_sentences[i] for i in l.src)
        tgt = " ".join(corpus.tgt_sentences[j] for j in l.tgt)
        out.add((src, tgt))
    return out


def alignment_f1(pred: Alignment, gold: Alignment) -> tuple[float, float, float]:
    """Strict link F1: a predicted non-null link counts iff its block pair
    exactly equals a gold non-null link; 0/0 ratios count as 0."""
    pred_set = {(l.src, l.tgt) for l in pred.non_null()}
    gold_set = {(l.src, l.tgt) for l in gold.non_null()}
    correct = len(pred_set & gold_set)
    precision = correct / len(pred_set) if pred_set else 0.0
    recall = correct / len(gold_set) if gold_set else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if (precision + recall) > 0
        else 0.0
    )
    return precision, recall, f1


def ranking_auc(scores: list[float], labels: list[int]) -> float:
    """Probability a random clean pair outscores a random noise pair, ties
    counting one half (the rank-sum formulation)."""
    if len(scores) != len(labels):
        raise ValueError("scores and labels must have equal length")
    arr = np.asarray(scores, dtype=np.float64)
    lab = np.asarray(labels, dtype=np.int64)
    n_pos = int(np.sum(lab == 1))
    n_neg = int(np.sum(lab == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ranking_auc needs both classes present")
    order = np.argsort(arr, kind="mergesort")
    ranks = np.empty(len(arr), dtype=np.float64)
    i = 0
    while i < len(arr):
        j = i
        while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # average rank, 1-based
        i = j + 1
    rank_sum = float(np.sum(ranks[lab == 1]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
