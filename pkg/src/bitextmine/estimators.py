"""Estimator-style wrappers over the functional core, so the pieces compose
with scikit-learn pipelines and hyperparameter tooling (get_params /
set_params come from BaseEstimator; constructor args are stored verbatim).

Raw numpy arrays are accepted everywhere and l2-normalized on the way in;
EmbeddingMatrix inputs that are already normalized pass through untouched.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import align as _align
from . import budget as _budget
from . import cleaning as _cleaning
from . import margin as _margin
from . import projection as _projection
from .validation import as_embedding_matrix, check_bitext, check_same_dim


class SentenceAligner(BaseEstimator):
    """Monotonic sentence alignment of one document pair.

    method="coarse" uses the banded coarse-to-fine search (identical to the
    full DP below full_dp_threshold); method="full" always runs the full DP.
    """

    def __init__(
        self,
        method: str = "coarse",
        max_block: int = 3,
        skip_penalty: float = 1.0,
        baseline_samples: int = 128,
        band_width: int = 10,
        full_dp_threshold: int = 64,
        seed: int = 0,
    ):
        self.method = method
        self.max_block = max_block
        self.skip_penalty = skip_penalty
        self.baseline_samples = baseline_samples
        self.band_width = band_width
        self.full_dp_threshold = full_dp_threshold
        self.seed = seed

    def _params(self) -> _align.AlignParams:
        return _align.AlignParams(
            max_block=self.max_block,
            skip_penalty=self.skip_penalty,
            baseline_samples=self.baseline_samples,
            band_width=self.band_width,
            full_dp_threshold=self.full_dp_threshold,
            seed=self.seed,
        )

    def align(self, src, tgt, counters: _align.AlignCounters | None = None) -> _align.Alignment:
        src_m = as_embedding_matrix(src, normalize=True, name="src")
        tgt_m = as_embedding_matrix(tgt, normalize=True, name="tgt")
        check_same_dim(src_m, tgt_m)
        if self.method == "full":
            return _align.align_full_dp(src_m, tgt_m, self._params(), counters)
        if self.method == "coarse":
            return _align.align_coarse_to_fine(src_m, tgt_m, self._params(), counters)
        raise ValueError(f"unknown method {self.method!r}")

    # predict is the sklearn-flavored alias: X is the (src, tgt) pair.
    def predict(self, X) -> _align.Alignment:
        src, tgt = X
        return self.align(src, tgt)


class MarginScorer(BaseEstimator):
    """Margin-based quality scores for row-aligned sentence pair embeddings."""

    def __init__(self, k: int = _margin.DEFAULT_K, knn_side: str = "cross"):
        self.k = k
        self.knn_side = knn_side

    def score_pairs(self, src, tgt) -> np.ndarray:
        src_m = as_embedding_matrix(src, normalize=True, name="src")
        tgt_m = as_embedding_matrix(tgt, normalize=True, name="tgt")
        check_same_dim(src_m, tgt_m)
        placeholder = [("", "")] * src_m.count
        scored = _margin.score_corpus(
            placeholder, src_m, tgt_m, k=self.k, knn_side=self.knn_side
        )
        return np.array([s for _, _, s in scored], dtype=np.float64)

    def score_corpus(self, bitext, src, tgt) -> _margin.ScoredBitext:
        pairs = check_bitext(bitext)
        src_m = as_embedding_matrix(src, normalize=True, name="src")
        tgt_m = as_embedding_matrix(tgt, normalize=True, name="tgt")
        check_same_dim(src_m, tgt_m)
        return _margin.score_corpus(pairs, src_m, tgt_m, k=self.k, knn_side=self.knn_side)


class ProjectionTrainer(BaseEstimator):
    """Contrastive projection head over frozen base embeddings: fit on
    row-aligned (src, tgt) bases, then transform any base matrix."""

    def __init__(
        self,
        out_dim: int = 256,
        scale: float = 1.0,
        include_positive: bool = False,
        window: int = 2,
        random_negatives: int = 2,
        batch_size: int = 32,
        lr: float = 0.1,
        epochs: int = 5,
        momentum: float = 0.9,
        seed: int = 0,
    ):
        self.out_dim = out_dim
        self.scale = scale
        self.include_positive = include_positive
        self.window = window
        self.random_negatives = random_negatives
        self.batch_size = batch_size
        self.lr = lr
        self.epochs = epochs
        self.momentum = momentum
        self.seed = seed

    def fit(self, src, tgt):
        src_m = as_embedding_matrix(src, normalize=True, name="src")
        tgt_m = as_embedding_matrix(tgt, normalize=True, name="tgt")
        check_same_dim(src_m, tgt_m)
        if src_m.count != tgt_m.count:
            raise ValueError("src and tgt must be row-aligned")
        cfg = _projection.TrainConfig(
            window=self.window,
            random_negatives=self.random_negatives,
            batch_size=self.batch_size,
            lr=self.lr,
            epochs=self.epochs,
            seed=self.seed,
            momentum=self.momentum,
        )
        init = _projection.init_model(
            in_dim=src_m.dim,
            out_dim=self.out_dim,
            seed=self.seed,
            scale=self.scale,
            include_positive=self.include_positive,
        )
        pairs = [("", "")] * src_m.count
        self.model_, self.loss_trace_ = _projection.train_projection(
            pairs, src_m, tgt_m, cfg, init
        )
        self.weight_ = self.model_.weight
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise NotFittedError("ProjectionTrainer must be fitted before transform")
        base = as_embedding_matrix(X, normalize=True, name="X")
        return _projection.forward_project(base, self.model_).as_float64()

    def fit_transform(self, src, tgt):
        return self.fit(src, tgt).transform(src)


class BitextCleaner(BaseEstimator, TransformerMixin):
    """Dedup -> overlap -> language-ID cleaning as a transformer over pairs."""

    def __init__(
        self,
        overlap_threshold: float = _cleaning.DEFAULT_OVERLAP_THRESHOLD,
        en_side: str = "src",
        strict_lang: bool = False,
        other_lang: str | None = None,
        min_confidence: float = 0.0,
    ):
        self.overlap_threshold = overlap_threshold
        self.en_side = en_side
        self.strict_lang = strict_lang
        self.other_lang = other_lang
        self.min_confidence = min_confidence

    def fit(self, X=None, y=None):
        return self

    def transform(self, X, predictions=None) -> _cleaning.Bitext:
        pairs = check_bitext(X)
        cleaned, stats, kept = _cleaning.clean_corpus(
            pairs,
            overlap_threshold=self.overlap_threshold,
            en_side=self.en_side,
            predictions=predictions,
            strict=self.strict_lang,
            other_lang=self.other_lang,
            min_confidence=self.min_confidence,
        )
        self.stats_ = stats
        self.kept_indices_ = kept
        return cleaned


class TokenBudgetSelector(BaseEstimator, TransformerMixin):
    """Score-ranked greedy selection under an English-side token budget."""

    def __init__(self, budget: int, en_side: str = "src", skip_overflow: bool = False):
        self.budget = budget
        self.en_side = en_side
        self.skip_overflow = skip_overflow

    def fit(self, X=None, y=None):
        return self

    def transform(self, X) -> _margin.Bitext:
        scored = [(str(s), str(t), float(sc)) for s, t, sc in X]
        return _budget.subsample(
            scored, self.budget, en_side=self.en_side, skip_overflow=self.skip_overflow
        )
