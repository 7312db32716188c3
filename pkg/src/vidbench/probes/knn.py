"""kNN probe: cosine nearest neighbours over standardised GAP features."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ..errors import ConfigError, DataError
from ..validation import check_feature_matrix, check_labels
from .common import fit_standardizer, predictions_from_logits, softmax, state_hash

_SHARE_SMOOTHING = 1e-9
_WINNER_BONUS = 1e-6


def _unit_rows(X: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    if (norms == 0).any():
        bad = int(np.flatnonzero(norms.ravel() == 0)[0])
        raise DataError(f"{what} row {bad} has zero norm after standardisation")
    return X / norms


class KnnProbe(BaseEstimator, ClassifierMixin):
    """Majority vote over the k cosine-nearest reference vectors.

    Vote ties are broken by the distance of each tied class's nearest voting
    neighbour, then by the lower class id. Logits encode the (smoothed)
    vote-share distribution, with a small bonus on the winning class so that
    argmax(logits) always reproduces the tie-broken decision.
    """

    def __init__(self, n_classes: int | None = None, k: int = 5, standardize: bool = True):
        self.n_classes = n_classes
        self.k = k
        self.standardize = standardize

    kind = "knn"

    def fit(self, X, y):
        X = check_feature_matrix(X)
        y = check_labels(y, n_samples=X.shape[0])
        if self.k > X.shape[0]:
            raise ConfigError(f"k={self.k} exceeds reference set of {X.shape[0]} points")
        n_classes = self.n_classes if self.n_classes is not None else int(y.max()) + 1
        if y.size and y.max() >= n_classes:
            raise DataError(f"label {y.max()} outside class count {n_classes}")
        if self.standardize:
            self.feat_mean_, self.feat_std_ = fit_standardizer(X)
        else:
            dim = X.shape[1]
            self.feat_mean_, self.feat_std_ = np.zeros(dim), np.ones(dim)
        refs = (X - self.feat_mean_) / self.feat_std_
        self.references_ = _unit_rows(refs, "reference")
        self.reference_labels_ = y
        self.classes_ = np.arange(n_classes)
        return self

    def _neighbours(self, X) -> tuple:
        if not hasattr(self, "references_"):
            raise ConfigError("probe is not fitted")
        X = check_feature_matrix(X, dim=self.feat_mean_.shape[0])
        queries = _unit_rows((X - self.feat_mean_) / self.feat_std_, "query")
        sims = queries @ self.references_.T
        # stable sort so equal similarities resolve to the lower reference index
        order = np.argsort(-sims, axis=1, kind="stable")[:, : self.k]
        return order, np.take_along_axis(sims, order, axis=1)

    @staticmethod
    def _break_ties(votes: np.ndarray, neigh_labels: np.ndarray, neigh_sims: np.ndarray) -> int:
        candidates = np.flatnonzero(votes == votes.max())
        if candidates.shape[0] == 1:
            return int(candidates[0])
        nearest = np.array(
            [neigh_sims[neigh_labels == c].max() for c in candidates]
        )
        survivors = candidates[nearest == nearest.max()]
        return int(survivors.min())

    def predict_logits(self, X) -> np.ndarray:
        order, sims = self._neighbours(X)
        n_classes = int(self.classes_.shape[0])
        labels = self.reference_labels_[order]
        logits = np.empty((order.shape[0], n_classes))
        for i in range(order.shape[0]):
            votes = np.bincount(labels[i], minlength=n_classes).astype(np.float64)
            winner = self._break_ties(votes, labels[i], sims[i])
            share = (votes + _SHARE_SMOOTHING) / (self.k + n_classes * _SHARE_SMOOTHING)
            row = np.log(share)
            row[winner] += _WINNER_BONUS
            logits[i] = row
        return logits

    def predict(self, X) -> np.ndarray:
        return self.predict_logits(X).argmax(axis=1)

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.predict_logits(X))

    def predictions(self, clip_ids, X, k: int = 5) -> list:
        return predictions_from_logits(clip_ids, self.predict_logits(X), k=k)

    def state_arrays(self) -> dict:
        return {
            "references": self.references_,
            "reference_labels": self.reference_labels_,
            "feat_mean": self.feat_mean_,
            "feat_std": self.feat_std_,
        }

    def load_state_arrays(self, arrays: dict) -> "KnnProbe":
        self.references_ = arrays["references"]
        self.reference_labels_ = arrays["reference_labels"].astype(np.int64)
        self.feat_mean_ = arrays["feat_mean"]
        self.feat_std_ = arrays["feat_std"]
        if self.n_classes is None:
            self.n_classes = int(self.reference_labels_.max()) + 1
        self.classes_ = np.arange(self.n_classes)
        return self

    def state_hash(self) -> str:
        return state_hash(self.state_arrays())
