"""Attentive probe: a learned query cross-attending over frozen tokens.

Forward and backward passes are written out by hand in numpy. Gradients are
exact (checked against central finite differences in the test suite), so all
computation stays in float64.
"""

import numpy as np
from scipy.special import erf
from sklearn.base import BaseEstimator, ClassifierMixin

from .._util import generator_from
from ..errors import ConfigError, DataError
from ..validation import check_labels, check_token_stack
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

LN_EPS = 1e-5
_INIT_SCALE = 0.02
_SQRT2 = np.sqrt(2.0)
_SQRT_2PI = np.sqrt(2.0 * np.pi)


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / _SQRT2))


def _gelu_grad(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + erf(x / _SQRT2)) + x * np.exp(-0.5 * x * x) / _SQRT_2PI


def _ln_forward(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray) -> tuple:
    mu = x.mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(x.var(axis=-1, keepdims=True) + LN_EPS)
    xhat = (x - mu) * inv
    return gamma * xhat + beta, (xhat, inv)


def _ln_backward(dy: np.ndarray, cache: tuple, gamma: np.ndarray) -> tuple:
    xhat, inv = cache
    axes = tuple(range(dy.ndim - 1))
    dgamma = (dy * xhat).sum(axis=axes)
    dbeta = dy.sum(axis=axes)
    dxhat = dy * gamma
    dx = (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    ) * inv
    return dx, dgamma, dbeta


def _mlp_width(dim: int, mlp_ratio: float) -> int:
    width = int(round(dim * mlp_ratio))
    if width < 1:
        raise ConfigError(f"mlp_ratio {mlp_ratio} gives empty hidden layer for dim {dim}")
    return width


def init_attentive_params(
    dim: int, n_classes: int, depth: int, heads: int, mlp_ratio: float, seed: int
) -> dict:
    """Seeded parameter dict; creation order is fixed for reproducibility."""
    if dim % heads != 0:
        raise ConfigError(f"embed dim {dim} is not divisible by {heads} heads")
    width = _mlp_width(dim, mlp_ratio)
    rng = generator_from(seed, "attentive-init")
    params = {"query": rng.standard_normal(dim) * _INIT_SCALE}
    for i in range(depth):
        key = f"block{i}."
        params[key + "ln_q.gamma"] = np.ones(dim)
        params[key + "ln_q.beta"] = np.zeros(dim)
        params[key + "ln_kv.gamma"] = np.ones(dim)
        params[key + "ln_kv.beta"] = np.zeros(dim)
        for name in ("wq", "wk", "wv", "wo"):
            params[key + f"attn.{name}"] = rng.standard_normal((dim, dim)) * _INIT_SCALE
        for name in ("bq", "bk", "bv", "bo"):
            params[key + f"attn.{name}"] = np.zeros(dim)
        params[key + "ln_mlp.gamma"] = np.ones(dim)
        params[key + "ln_mlp.beta"] = np.zeros(dim)
        params[key + "mlp.w1"] = rng.standard_normal((dim, width)) * _INIT_SCALE
        params[key + "mlp.b1"] = np.zeros(width)
        params[key + "mlp.w2"] = rng.standard_normal((width, dim)) * _INIT_SCALE
        params[key + "mlp.b2"] = np.zeros(dim)
    params["ln_f.gamma"] = np.ones(dim)
    params["ln_f.beta"] = np.zeros(dim)
    params["head.weight"] = np.zeros((dim, n_classes))
    params["head.bias"] = np.zeros(n_classes)
    return params


def attentive_forward(params: dict, tokens: np.ndarray, depth: int, heads: int) -> tuple:
    """Logits plus the per-block caches the backward pass needs."""
    b, s, dim = tokens.shape
    dh = dim // heads
    scale = 1.0 / np.sqrt(dh)
    q = np.broadcast_to(params["query"], (b, dim)).copy()
    caches = []
    for i in range(depth):
        key = f"block{i}."
        qn, c_q = _ln_forward(q, params[key + "ln_q.gamma"], params[key + "ln_q.beta"])
        kn, c_kv = _ln_forward(
            tokens, params[key + "ln_kv.gamma"], params[key + "ln_kv.beta"]
        )
        q_proj = qn @ params[key + "attn.wq"] + params[key + "attn.bq"]
        k_proj = kn @ params[key + "attn.wk"] + params[key + "attn.bk"]
        v_proj = kn @ params[key + "attn.wv"] + params[key + "attn.bv"]
        qh = q_proj.reshape(b, heads, dh)
        kh = k_proj.reshape(b, s, heads, dh).transpose(0, 2, 1, 3)
        vh = v_proj.reshape(b, s, heads, dh).transpose(0, 2, 1, 3)
        scores = np.einsum("bhd,bhsd->bhs", qh, kh) * scale
        attn = softmax(scores, axis=-1)
        ctx = np.einsum("bhs,bhsd->bhd", attn, vh).reshape(b, dim)
        attn_out = ctx @ params[key + "attn.wo"] + params[key + "attn.bo"]
        q_mid = q + attn_out
        mn, c_m = _ln_forward(
            q_mid, params[key + "ln_mlp.gamma"], params[key + "ln_mlp.beta"]
        )
        h1 = mn @ params[key + "mlp.w1"] + params[key + "mlp.b1"]
        a1 = _gelu(h1)
        mlp_out = a1 @ params[key + "mlp.w2"] + params[key + "mlp.b2"]
        caches.append(
            {
                "qn": qn,
                "c_q": c_q,
                "kn": kn,
                "c_kv": c_kv,
                "qh": qh,
                "kh": kh,
                "vh": vh,
                "attn": attn,
                "ctx": ctx,
                "mn": mn,
                "c_m": c_m,
                "h1": h1,
                "a1": a1,
            }
        )
        q = q_mid + mlp_out
    hf, c_f = _ln_forward(q, params["ln_f.gamma"], params["ln_f.beta"])
    logits = hf @ params["head.weight"] + params["head.bias"]
    return logits, (caches, hf, c_f)


def attentive_loss_and_grads(
    params: dict, tokens: np.ndarray, y: np.ndarray, depth: int, heads: int
) -> tuple:
    """Mean cross-entropy and exact gradients for every parameter."""
    b, s, dim = tokens.shape
    dh = dim // heads
    scale = 1.0 / np.sqrt(dh)
    logits, (caches, hf, c_f) = attentive_forward(params, tokens, depth, heads)
    rows = np.arange(b)
    loss = -log_softmax(logits)[rows, y].mean()

    grads = {}
    dlogits = softmax(logits)
    dlogits[rows, y] -= 1.0
    dlogits /= b
    grads["head.weight"] = hf.T @ dlogits
    grads["head.bias"] = dlogits.sum(axis=0)
    dhf = dlogits @ params["head.weight"].T
    dq, grads["ln_f.gamma"], grads["ln_f.beta"] = _ln_backward(
        dhf, c_f, params["ln_f.gamma"]
    )

    for i in reversed(range(depth)):
        key = f"block{i}."
        c = caches[i]
        dq_mid = dq.copy()
        grads[key + "mlp.w2"] = c["a1"].T @ dq
        grads[key + "mlp.b2"] = dq.sum(axis=0)
        dh1 = (dq @ params[key + "mlp.w2"].T) * _gelu_grad(c["h1"])
        grads[key + "mlp.w1"] = c["mn"].T @ dh1
        grads[key + "mlp.b1"] = dh1.sum(axis=0)
        dmn = dh1 @ params[key + "mlp.w1"].T
        dx, grads[key + "ln_mlp.gamma"], grads[key + "ln_mlp.beta"] = _ln_backward(
            dmn, c["c_m"], params[key + "ln_mlp.gamma"]
        )
        dq_mid += dx

        dq_prev = dq_mid.copy()
        grads[key + "attn.wo"] = c["ctx"].T @ dq_mid
        grads[key + "attn.bo"] = dq_mid.sum(axis=0)
        dctx = (dq_mid @ params[key + "attn.wo"].T).reshape(b, heads, dh)
        dattn = np.einsum("bhd,bhsd->bhs", dctx, c["vh"])
        dvh = np.einsum("bhs,bhd->bhsd", c["attn"], dctx)
        attn = c["attn"]
        dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
        dscores *= scale
        dqh = np.einsum("bhs,bhsd->bhd", dscores, c["kh"])
        dkh = np.einsum("bhs,bhd->bhsd", dscores, c["qh"])
        dq_proj = dqh.reshape(b, dim)
        dk_proj = dkh.transpose(0, 2, 1, 3).reshape(b, s, dim)
        dv_proj = dvh.transpose(0, 2, 1, 3).reshape(b, s, dim)
        grads[key + "attn.wq"] = c["qn"].T @ dq_proj
        grads[key + "attn.bq"] = dq_proj.sum(axis=0)
        dqn = dq_proj @ params[key + "attn.wq"].T
        kn_flat = c["kn"].reshape(b * s, dim)
        grads[key + "attn.wk"] = kn_flat.T @ dk_proj.reshape(b * s, dim)
        grads[key + "attn.bk"] = dk_proj.sum(axis=(0, 1))
        grads[key + "attn.wv"] = kn_flat.T @ dv_proj.reshape(b * s, dim)
        grads[key + "attn.bv"] = dv_proj.sum(axis=(0, 1))
        dkn = dk_proj @ params[key + "attn.wk"].T + dv_proj @ params[key + "attn.wv"].T
        dxq, grads[key + "ln_q.gamma"], grads[key + "ln_q.beta"] = _ln_backward(
            dqn, c["c_q"], params[key + "ln_q.gamma"]
        )
        dq_prev += dxq
        _, grads[key + "ln_kv.gamma"], grads[key + "ln_kv.beta"] = _ln_backward(
            dkn, c["c_kv"], params[key + "ln_kv.gamma"]
        )
        dq = dq_prev

    grads["query"] = dq.sum(axis=0)
    return float(loss), grads


class AttentiveProbe(BaseEstimator, ClassifierMixin):
    """Cross-attention readout over per-clip token features."""

    def __init__(
        self,
        n_classes: int | None = None,
        depth: int = 2,
        heads: int = 8,
        mlp_ratio: float = 2.0,
        standardize: bool = True,
        lr: float = DEFAULT_LR,
        epochs: int = DEFAULT_EPOCHS,
        batch: int = DEFAULT_BATCH,
        weight_decay: float = 0.0,
        seed: int = 0,
    ):
        self.n_classes = n_classes
        self.depth = depth
        self.heads = heads
        self.mlp_ratio = mlp_ratio
        self.standardize = standardize
        self.lr = lr
        self.epochs = epochs
        self.batch = batch
        self.weight_decay = weight_decay
        self.seed = seed

    kind = "attentive"

    def fit(self, X, y):
        X = check_token_stack(X)
        y = check_labels(y, n_samples=X.shape[0])
        n_classes = self.n_classes if self.n_classes is not None else int(y.max()) + 1
        if y.size and y.max() >= n_classes:
            raise DataError(f"label {y.max()} outside class count {n_classes}")
        dim = X.shape[2]
        if self.standardize:
            self.feat_mean_, self.feat_std_ = fit_standardizer(X)
        else:
            self.feat_mean_, self.feat_std_ = np.zeros(dim), np.ones(dim)
        X = (X - self.feat_mean_) / self.feat_std_
        params = init_attentive_params(
            dim, n_classes, self.depth, self.heads, self.mlp_ratio, self.seed
        )

        def loss_fn(p, xb, yb):
            return attentive_loss_and_grads(p, xb, yb, self.depth, self.heads)

        self.curve_ = run_training(
            params,
            loss_fn,
            X,
            y,
            lr=self.lr,
            epochs=self.epochs,
            batch=self.batch,
            weight_decay=self.weight_decay,
            seed=self.seed,
            describe="attentive probe",
        )
        self.params_ = params
        self.classes_ = np.arange(n_classes)
        return self

    def predict_logits(self, X) -> np.ndarray:
        if not hasattr(self, "params_"):
            raise ConfigError("probe is not fitted")
        X = check_token_stack(X, dim=self.feat_mean_.shape[0])
        X = (X - self.feat_mean_) / self.feat_std_
        logits, _ = attentive_forward(self.params_, X, self.depth, self.heads)
        return logits

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.predict_logits(X))

    def predict(self, X) -> np.ndarray:
        return self.predict_logits(X).argmax(axis=1)

    def predictions(self, clip_ids, X, k: int = 5) -> list:
        return predictions_from_logits(clip_ids, self.predict_logits(X), k=k)

    def state_arrays(self) -> dict:
        arrays = dict(self.params_)
        arrays["feat_mean"] = self.feat_mean_
        arrays["feat_std"] = self.feat_std_
        return arrays

    def load_state_arrays(self, arrays: dict) -> "AttentiveProbe":
        arrays = dict(arrays)
        self.feat_mean_ = arrays.pop("feat_mean")
        self.feat_std_ = arrays.pop("feat_std")
        self.params_ = arrays
        self.classes_ = np.arange(arrays["head.bias"].shape[0])
        self.curve_ = []
        return self

    def state_hash(self) -> str:
        return state_hash(self.state_arrays())
