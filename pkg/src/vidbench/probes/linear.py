"""Linear probe: multinomial logistic regression on GAP vectors."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ..errors import ConfigError, DataError
from ..validation import check_feature_matrix, check_labels
from .common import (
    DEFAULT_BATCH,
    DEFAULT_EPOCHS,
    DEFAULT_LR,
    fit_standardizer,
    log_softmax,
    predictions_from_logits,
    run_training,
    softmax,
    state_hash,
)


def _ce_loss_and_grads(params: dict, X: np.ndarray, y: np.ndarray) -> tuple:
    logits = X @ params["weight"] + params["bias"]
    logp = log_softmax(logits)
    n = X.shape[0]
    loss = -logp[np.arange(n), y].mean()
    dlogits = softmax(logits)
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    return float(loss), {"weight": X.T @ dlogits, "bias": dlogits.sum(axis=0)}


class LinearProbe(BaseEstimator, ClassifierMixin):
    """Softmax regression readout over frozen GAP features."""

    def __init__(
        self,
        n_classes: int | None = None,
        standardize: bool = True,
        lr: float = DEFAULT_LR,
        epochs: int = DEFAULT_EPOCHS,
        batch: int = DEFAULT_BATCH,
        weight_decay: float = 0.0,
        seed: int = 0,
    ):
        self.n_classes = n_classes
        self.standardize = standardize
        self.lr = lr
        self.epochs = epochs
        self.batch = batch
        self.weight_decay = weight_decay
        self.seed = seed

    kind = "linear"

    def fit(self, X, y):
        X = check_feature_matrix(X)
        y = check_labels(y, n_samples=X.shape[0])
        n_classes = self.n_classes if self.n_classes is not None else int(y.max()) + 1
        if y.size and y.max() >= n_classes:
            raise DataError(f"label {y.max()} outside class count {n_classes}")
        if self.standardize:
            self.feat_mean_, self.feat_std_ = fit_standardizer(X)
        else:
            dim = X.shape[1]
            self.feat_mean_, self.feat_std_ = np.zeros(dim), np.ones(dim)
        X = (X - self.feat_mean_) / self.feat_std_
        params = {
            "weight": np.zeros((X.shape[1], n_classes)),
            "bias": np.zeros(n_classes),
        }
        self.curve_ = run_training(
            params,
            _ce_loss_and_grads,
            X,
            y,
            lr=self.lr,
            epochs=self.epochs,
            batch=self.batch,
            weight_decay=self.weight_decay,
            seed=self.seed,
            describe="linear probe",
        )
        self.params_ = params
        self.classes_ = np.arange(n_classes)
        return self

    def predict_logits(self, X) -> np.ndarray:
        if not hasattr(self, "params_"):
            raise ConfigError("probe is not fitted")
        X = check_feature_matrix(X, dim=self.feat_mean_.shape[0])
        X = (X - self.feat_mean_) / self.feat_std_
        return X @ self.params_["weight"] + self.params_["bias"]

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.predict_logits(X))

    def predict(self, X) -> np.ndarray:
        return self.predict_logits(X).argmax(axis=1)

    def predictions(self, clip_ids, X, k: int = 5) -> list:
        return predictions_from_logits(clip_ids, self.predict_logits(X), k=k)

    def state_arrays(self) -> dict:
        return {
            "weight": self.params_["weight"],
            "bias": self.params_["bias"],
            "feat_mean": self.feat_mean_,
            "feat_std": self.feat_std_,
        }

    def load_state_arrays(self, arrays: dict) -> "LinearProbe":
        self.params_ = {"weight": arrays["weight"], "bias": arrays["bias"]}
        self.feat_mean_ = arrays["feat_mean"]
        self.feat_std_ = arrays["feat_std"]
        self.classes_ = np.arange(arrays["bias"].shape[0])
        self.curve_ = []
        return self

    def state_hash(self) -> str:
        return state_hash(self.state_arrays())
