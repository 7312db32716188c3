"""Scalar robustness metrics over embeddings and prediction logs."""

from .embedding import (
    STATIC_ANCHORS,
    EmbeddingPair,
    anchor_cosines,
    auc_rsi,
    cosine_similarity,
    decoupling_index,
    dscs,
    macro_micro_decomposition,
    mean_matrix_cosine,
    pair_cosines,
    rsi,
    spatial_grounding_index,
    temporal_consistency_bonus,
)
from .fisher import fisher_by_tier, fisher_ratio, one_vs_rest_fisher
from .prediction import (
    CONFIDENT_THRESHOLD,
    OVERCONFIDENT_ACCURACY,
    OVERCONFIDENT_CONFIDENCE,
    calibration_analysis,
    ccr,
    family_dependency_drops,
    frame_position_bias,
    grouped_accuracy,
    per_class_accuracy_delta,
    retention,
    semantic_flip_rate,
    temporal_dependency_index,
    topk_accuracy,
)
from .result import METRIC_RANGES, MetricResult

__all__ = [
    "CONFIDENT_THRESHOLD",
    "METRIC_RANGES",
    "OVERCONFIDENT_ACCURACY",
    "OVERCONFIDENT_CONFIDENCE",
    "STATIC_ANCHORS",
    "EmbeddingPair",
    "MetricResult",
    "anchor_cosines",
    "auc_rsi",
    "calibration_analysis",
    "ccr",
    "cosine_similarity",
    "decoupling_index",
    "dscs",
    "family_dependency_drops",
    "fisher_by_tier",
    "fisher_ratio",
    "frame_position_bias",
    "grouped_accuracy",
    "macro_micro_decomposition",
    "mean_matrix_cosine",
    "one_vs_rest_fisher",
    "pair_cosines",
    "per_class_accuracy_delta",
    "retention",
    "rsi",
    "semantic_flip_rate",
    "spatial_grounding_index",
    "temporal_consistency_bonus",
    "topk_accuracy",
]
