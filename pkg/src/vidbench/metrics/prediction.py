"""Prediction-space metrics: accuracy, retention, consistency, calibration."""

import numpy as np

from .._util import exact_mean
from ..errors import DataError
from .embedding import EmbeddingPair  # noqa: F401  (re-export for ccr callers)
from .result import MetricResult

CONFIDENT_THRESHOLD = 0.75
OVERCONFIDENT_CONFIDENCE = 0.70
OVERCONFIDENT_ACCURACY = 0.40

STATIC_ANCHOR_ORDER = ("first", "middle", "last")


def _aligned_labels(predictions, labels) -> np.ndarray:
    if hasattr(labels, "keys"):
        try:
            return np.asarray([labels[p.clip_id] for p in predictions], dtype=np.int64)
        except KeyError as exc:
            raise DataError(f"no label for clip {exc.args[0]!r}") from exc
    arr = np.asarray(labels, dtype=np.int64)
    if arr.shape[0] != len(predictions):
        raise DataError(
            f"{len(predictions)} predictions but {arr.shape[0]} labels"
        )
    return arr


def topk_accuracy(predictions, labels, k: int = 1) -> float:
    """Fraction of clips whose label appears in the top-k ranked classes."""
    if not predictions:
        raise DataError("no predictions")
    y = _aligned_labels(predictions, labels)
    hits = [1.0 if y[i] in p.topk[:k] else 0.0 for i, p in enumerate(predictions)]
    return exact_mean(hits)


def retention(perturbed_acc: float, clean_acc: float) -> float:
    """Perturbed accuracy as a percentage of the clean baseline."""
    if clean_acc <= 0:
        raise DataError("retention undefined for zero clean accuracy")
    return 100.0 * float(perturbed_acc) / float(clean_acc)


def ccr(pairs, knn_probe) -> float:
    """Fraction of clips the kNN routes to the same class after perturbation."""
    if not pairs:
        raise DataError("no embedding pairs")
    clean = np.stack([p.f_clean for p in pairs])
    pert = np.stack([p.f_pert for p in pairs])
    same = knn_probe.predict(clean) == knn_probe.predict(pert)
    return exact_mean([1.0 if flag else 0.0 for flag in same])


def _predictions_by_clip(predictions) -> dict:
    by_clip = {}
    for p in predictions:
        if p.clip_id in by_clip:
            raise DataError(f"duplicate prediction for clip {p.clip_id!r}")
        by_clip[p.clip_id] = p
    return by_clip


def semantic_flip_rate(clean_preds, reversed_preds, antonym: dict) -> float:
    """Of the predictions reversal changes, the fraction landing on the antonym.

    Prediction-relative: the reversed prediction is compared against the
    antonym of the clean prediction, not of the ground-truth label. With no
    changed predictions the rate is defined as 0.
    """
    clean_by = _predictions_by_clip(clean_preds)
    rev_by = _predictions_by_clip(reversed_preds)
    if set(clean_by) != set(rev_by):
        raise DataError("clean and reversed predictions cover different clips")
    changed = 0
    antonymous = 0
    for clip_id, clean in clean_by.items():
        rev = rev_by[clip_id]
        if rev.predicted == clean.predicted:
            continue
        changed += 1
        if antonym.get(clean.predicted) == rev.predicted:
            antonymous += 1
    if changed == 0:
        return 0.0
    return antonymous / changed


def frame_position_bias(accuracy_by_anchor: dict) -> MetricResult:
    """Which static anchor wins, and by how much (max minus min accuracy)."""
    missing = [a for a in STATIC_ANCHOR_ORDER if a not in accuracy_by_anchor]
    if missing:
        raise DataError(f"missing anchors: {missing}")
    values = [float(accuracy_by_anchor[a]) for a in STATIC_ANCHOR_ORDER]
    best = STATIC_ANCHOR_ORDER[int(np.argmax(values))]
    spread = max(values) - min(values)
    return MetricResult(
        metric="frame_position_bias",
        value=spread,
        group={
            "anchor": best,
            "accuracies": {a: float(accuracy_by_anchor[a]) for a in STATIC_ANCHOR_ORDER},
        },
        n=len(STATIC_ANCHOR_ORDER),
    )


def family_dependency_drops(clean_acc: float, family_accuracies: dict) -> dict:
    """Per-family relative accuracy drop, clamped to [0, 1]."""
    if clean_acc <= 0:
        raise DataError("temporal dependency undefined for zero clean accuracy")
    drops = {}
    for family in sorted(family_accuracies):
        values = family_accuracies[family]
        if np.ndim(values) == 0:
            mean_acc = float(values)
        else:
            if len(values) == 0:
                raise DataError(f"family {family!r} has no accuracies")
            mean_acc = exact_mean([float(v) for v in values])
        drops[family] = min(1.0, max(0.0, (clean_acc - mean_acc) / clean_acc))
    return drops


def temporal_dependency_index(clean_acc: float, family_accuracies: dict) -> float:
    """Mean relative drop across temporal perturbation families."""
    drops = family_dependency_drops(clean_acc, family_accuracies)
    if not drops:
        raise DataError("no perturbation families given")
    return exact_mean(list(drops.values()))


def calibration_analysis(predictions, labels) -> dict:
    """Confidence diagnostics over one prediction log.

    Returns the confident-wrong rate (wrong fraction among predictions with
    confidence above 0.75), per-class accuracy and mean confidence,
    overconfident-class flags, and classes ranked by error rate.
    """
    if not predictions:
        raise DataError("no predictions")
    y = _aligned_labels(predictions, labels)
    correct = np.array([p.predicted == y[i] for i, p in enumerate(predictions)])
    confidence = np.array([p.confidence for p in predictions])

    confident = confidence > CONFIDENT_THRESHOLD
    n_confident = int(confident.sum())
    confident_wrong = (
        float((~correct[confident]).mean()) if n_confident else 0.0
    )

    per_class = []
    flagged = []
    for class_id in np.unique(y):
        mask = y == class_id
        acc = float(correct[mask].mean())
        conf = float(confidence[mask].mean())
        entry = {
            "class_id": int(class_id),
            "n": int(mask.sum()),
            "accuracy": acc,
            "mean_confidence": conf,
        }
        per_class.append(entry)
        if conf > OVERCONFIDENT_CONFIDENCE and acc < OVERCONFIDENT_ACCURACY:
            flagged.append(int(class_id))

    hardest = sorted(
        (
            {
                "class_id": entry["class_id"],
                "n": entry["n"],
                "error_rate": 1.0 - entry["accuracy"],
            }
            for entry in per_class
        ),
        key=lambda row: (-row["error_rate"], row["class_id"]),
    )

    return {
        "n": len(predictions),
        "overall_accuracy": float(correct.mean()),
        "confident_wrong_rate": confident_wrong,
        "n_confident": n_confident,
        "per_class": per_class,
        "overconfident_classes": flagged,
        "hardest_classes": hardest,
    }


def grouped_accuracy(predictions, labels, group_of: dict) -> dict:
    """Accuracy split by an arbitrary class-to-group assignment."""
    if not predictions:
        raise DataError("no predictions")
    y = _aligned_labels(predictions, labels)
    totals: dict = {}
    hits: dict = {}
    for i, p in enumerate(predictions):
        group = group_of.get(int(y[i]))
        if group is None:
            continue
        totals[group] = totals.get(group, 0) + 1
        hits[group] = hits.get(group, 0) + (1 if p.predicted == y[i] else 0)
    return {
        group: {"accuracy": hits[group] / totals[group], "n": totals[group]}
        for group in sorted(totals)
    }


def per_class_accuracy_delta(preds_a, preds_b, labels) -> dict:
    """Per-class accuracy of log B minus log A, aligned by clip id."""
    a_by = _predictions_by_clip(preds_a)
    b_by = _predictions_by_clip(preds_b)
    if set(a_by) != set(b_by):
        raise DataError("prediction logs cover different clips")
    y = _aligned_labels(list(a_by.values()), labels)
    deltas = {}
    for class_id in np.unique(y):
        clip_ids = [p.clip_id for i, p in enumerate(a_by.values()) if y[i] == class_id]
        label = int(class_id)
        acc_a = exact_mean([1.0 if a_by[c].predicted == label else 0.0 for c in clip_ids])
        acc_b = exact_mean([1.0 if b_by[c].predicted == label else 0.0 for c in clip_ids])
        deltas[label] = {"delta": acc_b - acc_a, "n": len(clip_ids)}
    return deltas
