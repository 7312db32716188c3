"""Fisher discriminant ratio on pooled features, globally and per category."""

import math

import numpy as np

from ..errors import DataError
from ..validation import check_feature_matrix, check_labels

SCATTER_EPSILON = 1e-8


def _standardize_global(X: np.ndarray) -> np.ndarray:
    """Centre and divide by the global root-mean variance.

    The scale factor is a rotation-invariant scalar (not per-dimension), so
    the ratio stays exactly invariant under orthogonal transforms and under
    uniform positive rescaling of the raw features.
    """
    centered = X - X.mean(axis=0)
    scale = math.sqrt(float((centered**2).mean()))
    if scale < 1e-12:
        return centered
    return centered / scale


def fisher_ratio(X, y) -> float:
    """trace(between-class scatter) / (trace(within-class scatter) + epsilon)."""
    X = check_feature_matrix(X)
    y = check_labels(y, n_samples=X.shape[0])
    classes, counts = np.unique(y, return_counts=True)
    if classes.shape[0] < 2:
        raise DataError("fisher ratio needs at least two classes")
    if counts.min() < 2:
        small = int(classes[counts.argmin()])
        raise DataError(f"class {small} has fewer than two samples")
    Z = _standardize_global(X)
    overall = Z.mean(axis=0)
    between = 0.0
    within = 0.0
    for class_id, count in zip(classes, counts):
        rows = Z[y == class_id]
        mu = rows.mean(axis=0)
        between += count * float(((mu - overall) ** 2).sum())
        within += float(((rows - mu) ** 2).sum())
    return between / (within + SCATTER_EPSILON)


def one_vs_rest_fisher(X, y, positive_class: int) -> float:
    binary = (np.asarray(y) == positive_class).astype(np.int64)
    return fisher_ratio(X, binary)


def fisher_by_tier(X, y, taxonomy) -> dict:
    """Global ratio plus per-tier summaries.

    Within each semantic tier, every member class gets a one-vs-rest ratio
    computed on that tier's samples only; the tier is summarised by the mean
    and standard deviation of those per-class values.
    """
    X = check_feature_matrix(X)
    y = check_labels(y, n_samples=X.shape[0])
    out = {"global": fisher_ratio(X, y), "tiers": {}}
    for tier in taxonomy.tiers_present():
        tier_classes = [c for c in taxonomy.tier_classes(tier) if (y == c).sum() >= 2]
        mask = np.isin(y, tier_classes)
        if mask.sum() < 4 or len(tier_classes) < 2:
            continue
        tier_X, tier_y = X[mask], y[mask]
        per_class = {}
        for class_id in tier_classes:
            per_class[int(class_id)] = one_vs_rest_fisher(tier_X, tier_y, class_id)
        values = np.array(list(per_class.values()))
        out["tiers"][tier] = {
            "mean": float(values.mean()),
            "std": float(values.std()),
            "per_class": per_class,
            "n_classes": len(per_class),
            "n_samples": int(mask.sum()),
        }
    return out
