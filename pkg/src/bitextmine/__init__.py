"""bitextmine: mine clean parallel corpora from document-aligned bilingual
text via embedding-based sentence alignment, margin-kNN filtering,
contrastive projection training, and token-budget selection."""

from .align import (
    AlignCounters,
    Alignment,
    AlignParams,
    Link,
    align_coarse_to_fine,
    align_full_dp,
    brute_force_align,
    estimate_baseline,
    similarity_matrix,
    substitution_cost,
)
from .budget import count_tokens_en, subsample
from .cleaning import (
    LidPrediction,
    clean_corpus,
    deduplicate,
    detect_script,
    filter_lang,
    filter_overlap,
    overlap_ratio,
)
from .embeddings import (
    EmbeddingFormatError,
    EmbeddingMatrix,
    block_embed,
    cosine,
    l2_normalize,
    load_embeddings,
    save_embeddings,
)
from .estimators import (
    BitextCleaner,
    MarginScorer,
    ProjectionTrainer,
    SentenceAligner,
    TokenBudgetSelector,
)
from .margin import KnnResult, knn_cosine, margin_ratio, margin_score, score_corpus
from .projection import (
    BatchItem,
    DegenerateRowError,
    ProjectionModel,
    TrainConfig,
    TrainingDivergedError,
    build_negative_sets,
    forward_project,
    init_model,
    load_projection,
    loss_and_gradient,
    mnr_loss,
    save_projection,
    train_projection,
)
from .synthetic import (
    InfeasibleSpecError,
    SyntheticCorpus,
    SyntheticSpec,
    alignment_f1,
    gen_synthetic,
    gold_pair_set,
    labeled_pair_corpus,
    ranking_auc,
)

__version__ = "0.1.0"

__all__ = [
    "AlignCounters",
    "Alignment",
    "AlignParams",
    "BatchItem",
    "BitextCleaner",
    "DegenerateRowError",
    "EmbeddingFormatError",
    "EmbeddingMatrix",
    "InfeasibleSpecError",
    "KnnResult",
    "LidPrediction",
    "Link",
    "MarginScorer",
    "ProjectionModel",
    "ProjectionTrainer",
    "SentenceAligner",
    "SyntheticCorpus",
    "SyntheticSpec",
    "TokenBudgetSelector",
    "TrainConfig",
    "TrainingDivergedError",
    "align_coarse_to_fine",
    "align_full_dp",
    "alignment_f1",
    "block_embed",
    "brute_force_align",
    "build_negative_sets",
    "clean_corpus",
    "cosine",
    "count_tokens_en",
    "deduplicate",
    "detect_script",
    "estimate_baseline",
    "filter_lang",
    "filter_overlap",
    "forward_project",
    "gen_synthetic",
    "gold_pair_set",
    "init_model",
    "knn_cosine",
    "l2_normalize",
    "labeled_pair_corpus",
    "load_embeddings",
    "load_projection",
    "loss_and_gradient",
    "margin_ratio",
    "margin_score",
    "mnr_loss",
    "overlap_ratio",
    "ranking_auc",
    "save_embeddings",
    "save_projection",
    "score_corpus",
    "similarity_matrix",
    "subsample",
    "substitution_cost",
    "train_projection",
]
