"""Embedding-space metrics over paired clean and perturbed vectors."""

import math
from dataclasses import dataclass

import numpy as np

from .._util import exact_mean
from ..errors import DataError
from ..validation import check_vector

STATIC_ANCHORS = ("first", "middle", "last")


@dataclass(frozen=True)
class EmbeddingPair:
    """Clean and perturbed embedding of the same clip."""

    clip_id: str
    f_clean: np.ndarray
    f_pert: np.ndarray
    spec: object = None

    def __post_init__(self):
        clean = check_vector(self.f_clean, name=f"{self.clip_id} clean vector")
        pert = check_vector(
            self.f_pert, dim=clean.shape[0], name=f"{self.clip_id} perturbed vector"
        )
        object.__setattr__(self, "f_clean", clean)
        object.__setattr__(self, "f_pert", pert)


def cosine_similarity(u: np.ndarray, v: np.ndarray, what: str = "vector") -> float:
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    nu = math.sqrt(float(u @ u))
    nv = math.sqrt(float(v @ v))
    if nu == 0.0 or nv == 0.0:
        raise DataError(f"{what}: zero-norm vector in cosine similarity")
    return float(u @ v) / (nu * nv)


def pair_cosines(pairs) -> list:
    if not pairs:
        raise DataError("need at least one embedding pair")
    return [cosine_similarity(p.f_clean, p.f_pert, what=p.clip_id) for p in pairs]


def rsi(pairs) -> float:
    """Mean cosine similarity between clean and perturbed embeddings."""
    return exact_mean(pair_cosines(pairs))


def mean_matrix_cosine(clean: np.ndarray, other: np.ndarray, what: str = "row") -> float:
    """Mean row-wise cosine between two aligned (N, D) matrices."""
    clean = np.asarray(clean, dtype=np.float64)
    other = np.asarray(other, dtype=np.float64)
    if clean.shape != other.shape or clean.ndim != 2:
        raise DataError(
            f"matrices must share an (N, D) shape, got {clean.shape} vs {other.shape}"
        )
    return exact_mean(
        [cosine_similarity(clean[i], other[i], what=f"{what} {i}") for i in range(clean.shape[0])]
    )


def auc_rsi(curve) -> float:
    """Normalised trapezoidal area under a severity-indexed similarity curve.

    The clean point (0, 1) is prepended when the curve does not already start
    at severity 0; the integral is divided by the largest severity so results
    are comparable across families with different severity scales.
    """
    points = [(float(s), float(v)) for s, v in curve]
    if not points:
        raise DataError("similarity curve is empty")
    severities = [s for s, _ in points]
    if any(b <= a for a, b in zip(severities, severities[1:])):
        raise DataError(f"severities must be strictly increasing, got {severities}")
    if severities[0] < 0:
        raise DataError("severities must be non-negative")
    if severities[0] > 0:
        points.insert(0, (0.0, 1.0))
    if len(points) < 2:
        raise DataError("need at least two points to integrate")
    s_max = points[-1][0]
    areas = [
        (points[i + 1][0] - points[i][0]) * (points[i + 1][1] + points[i][1]) / 2.0
        for i in range(len(points) - 1)
    ]
    return math.fsum(areas) / s_max


def dscs(r_sem: float, cos_rev: float) -> float:
    """Directional semantic confusion: flip rate scaled by embedding movement."""
    if not 0.0 <= r_sem <= 1.0:
        raise DataError(f"semantic flip rate {r_sem} outside [0, 1]")
    if not -1.0 <= cos_rev <= 1.0 + 1e-12:
        raise DataError(f"reversal cosine {cos_rev} outside [-1, 1]")
    return r_sem * (1.0 - min(cos_rev, 1.0))


def decoupling_index(ccr_curve, rsi_curve) -> float:
    """Mean absolute gap between classifier consistency and embedding stability."""
    ccr_points = [(float(s), float(v)) for s, v in ccr_curve]
    rsi_points = [(float(s), float(v)) for s, v in rsi_curve]
    if [s for s, _ in ccr_points] != [s for s, _ in rsi_points]:
        raise DataError("curves are not on the same severity grid")
    if not ccr_points:
        raise DataError("curves are empty")
    return exact_mean([abs(c - r) for (_, c), (_, r) in zip(ccr_points, rsi_points)])


def temporal_consistency_bonus(cos_static: float, cos_varying: float) -> float:
    """How much gentler temporally static noise is than per-frame varying noise."""
    return float(cos_static) - float(cos_varying)


def spatial_grounding_index(clean: np.ndarray, static_by_anchor: dict) -> float:
    """Max over anchors of mean cosine between clean and single-frame-static clips."""
    if not static_by_anchor:
        raise DataError("need at least one anchor")
    return max(
        mean_matrix_cosine(clean, static_by_anchor[a], what=f"anchor {a}")
        for a in static_by_anchor
    )


def anchor_cosines(clean: np.ndarray, static_by_anchor: dict) -> dict:
    return {
        a: mean_matrix_cosine(clean, static_by_anchor[a], what=f"anchor {a}")
        for a in static_by_anchor
    }


def macro_micro_decomposition(cos_segment: float, cos_random: float) -> tuple:
    """Split shuffle damage into coarse (segment) and fine (residual) parts."""
    macro = 1.0 - float(cos_segment)
    micro = float(cos_segment) - float(cos_random)
    return macro, micro
