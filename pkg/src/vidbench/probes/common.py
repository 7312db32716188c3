"""Shared probe plumbing: config, predictions, optimizer, checkpoints."""

import hashlib
import io
import json
import math
import zipfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib import format as _npformat

from .._util import generator_from
from ..errors import ConfigError, HarnessError, StoreError

PROBE_KINDS = ("attentive", "linear", "knn")

DEFAULT_LR = 1e-3
DEFAULT_EPOCHS = 20
DEFAULT_BATCH = 64


@dataclass(frozen=True)
class ProbeConfig:
    """Declarative description of one probe, independent of the estimator."""

    kind: str
    depth: int = 2
    heads: int = 8
    mlp_ratio: float = 2.0
    k: int = 5
    distance: str = "cosine"
    standardize: bool = True
    lr: float = DEFAULT_LR
    epochs: int = DEFAULT_EPOCHS
    batch: int = DEFAULT_BATCH
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PROBE_KINDS:
            raise ConfigError(f"probe kind must be one of {PROBE_KINDS}, got {self.kind!r}")
        if self.distance != "cosine":
            raise ConfigError(f"only cosine distance is supported, got {self.distance!r}")
        if self.depth < 1 or self.heads < 1 or self.k < 1:
            raise ConfigError("depth, heads, and k must all be >= 1")
        if self.mlp_ratio <= 0:
            raise ConfigError("mlp_ratio must be positive")
        if self.lr <= 0 or self.batch < 1 or self.epochs < 0:
            raise ConfigError("invalid optimizer parameters")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ProbeConfig":
        return cls(**data)


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - logits.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=axis, keepdims=True)


def log_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - logits.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def topk_indices(logits: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest logits, ties resolved toward lower class ids."""
    order = np.argsort(-np.asarray(logits, dtype=np.float64), kind="stable")
    return order[: max(1, min(k, order.shape[0]))]


@dataclass(frozen=True)
class ProbePrediction:
    """One classified clip: logits, argmax class, confidence, ranked top-k."""

    clip_id: str
    logits: np.ndarray
    predicted: int
    confidence: float
    topk: tuple = field(default=())

    def __post_init__(self):
        logits = np.asarray(self.logits, dtype=np.float64).reshape(-1)
        if not np.isfinite(logits).all():
            raise HarnessError(f"{self.clip_id}: logits contain non-finite values")
        object.__setattr__(self, "logits", logits)
        if logits[self.predicted] != logits.max():
            raise HarnessError(f"{self.clip_id}: predicted class is not an argmax")
        if not (0.0 < self.confidence <= 1.0):
            raise HarnessError(f"{self.clip_id}: confidence {self.confidence} outside (0,1]")
        probs = softmax(logits)
        if abs(probs.sum() - 1.0) > 1e-6:
            raise HarnessError(f"{self.clip_id}: softmax does not normalise")
        if abs(float(probs.max()) - self.confidence) > 1e-9:
            raise HarnessError(f"{self.clip_id}: confidence does not match max softmax")
        topk = tuple(int(c) for c in self.topk)
        if not topk or topk[0] != self.predicted:
            raise HarnessError(f"{self.clip_id}: top-k list must start with the prediction")
        object.__setattr__(self, "topk", topk)

    @property
    def n_classes(self) -> int:
        return int(self.logits.shape[0])


def prediction_from_logits(clip_id: str, logits: np.ndarray, k: int = 5) -> ProbePrediction:
    logits = np.asarray(logits, dtype=np.float64).reshape(-1)
    top = topk_indices(logits, k)
    probs = softmax(logits)
    return ProbePrediction(
        clip_id=clip_id,
        logits=logits,
        predicted=int(top[0]),
        confidence=float(probs.max()),
        topk=tuple(int(c) for c in top),
    )


def predictions_from_logits(clip_ids, logits: np.ndarray, k: int = 5) -> list:
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2 or len(clip_ids) != logits.shape[0]:
        raise HarnessError("clip_ids and logits rows must align")
    return [prediction_from_logits(cid, row, k=k) for cid, row in zip(clip_ids, logits)]


def fit_standardizer(X: np.ndarray) -> tuple:
    """Per-dimension mean and std over the fit set; zero-variance dims get 1."""
    X = np.asarray(X, dtype=np.float64)
    flat = X.reshape(-1, X.shape[-1])
    mean = flat.mean(axis=0)
    std = flat.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return mean, std


class RmsOptimizer:
    """Momentum-free adaptive-gradient updates with cosine-decayed step size."""

    def __init__(
        self,
        params: dict,
        lr: float,
        total_steps: int,
        weight_decay: float = 0.0,
        rho: float = 0.9,
        eps: float = 1e-8,
    ):
        self.lr = float(lr)
        self.total_steps = max(1, int(total_steps))
        self.weight_decay = float(weight_decay)
        self.rho = float(rho)
        self.eps = float(eps)
        self.step_count = 0
        self._accum = {k: np.zeros_like(v) for k, v in params.items()}

    def current_lr(self) -> float:
        frac = self.step_count / self.total_steps
        return self.lr * 0.5 * (1.0 + math.cos(math.pi * frac))

    def step(self, params: dict, grads: dict) -> None:
        lr_t = self.current_lr()
        self.step_count += 1
        for key, value in params.items():
            grad = grads[key]
            if self.weight_decay:
                grad = grad + self.weight_decay * value
            accum = self._accum[key]
            accum *= self.rho
            accum += (1.0 - self.rho) * grad * grad
            value -= lr_t * grad / (np.sqrt(accum) + self.eps)


def run_training(
    params: dict,
    loss_and_grads,
    X: np.ndarray,
    y: np.ndarray,
    *,
    lr: float,
    epochs: int,
    batch: int,
    weight_decay: float,
    seed: int,
    describe: str,
) -> list:
    """Mini-batch training loop; returns the per-epoch mean-loss curve.

    Aborts with diagnostics on a non-finite loss rather than silently
    producing a garbage probe.
    """
    n = X.shape[0]
    steps_per_epoch = math.ceil(n / batch)
    optimizer = RmsOptimizer(params, lr, epochs * steps_per_epoch, weight_decay)
    rng = generator_from(seed, "probe-train")
    curve = []
    for epoch in range(epochs):
        order = rng.permutation(n)
        weighted = []
        for step in range(steps_per_epoch):
            idx = order[step * batch : (step + 1) * batch]
            loss, grads = loss_and_grads(params, X[idx], y[idx])
            if not np.isfinite(loss):
                raise HarnessError(
                    f"{describe}: non-finite loss {loss!r} at epoch {epoch} "
                    f"step {step} (lr={optimizer.current_lr():.3g})"
                )
            optimizer.step(params, grads)
            weighted.append(float(loss) * idx.shape[0])
        curve.append(math.fsum(weighted) / n)
    return curve


def state_hash(arrays: dict) -> str:
    """Order-independent digest of a parameter dict, bitwise on the payload."""
    digest = hashlib.sha256()
    for key in sorted(arrays):
        value = np.ascontiguousarray(arrays[key])
        digest.update(key.encode())
        digest.update(str(value.dtype).encode())
        digest.update(str(value.shape).encode())
        digest.update(value.tobytes())
    return digest.hexdigest()


def _write_npz_deterministic(path: Path, arrays: dict) -> None:
    # np.savez stamps zip members with the current time; fixed metadata keeps
    # checkpoint bytes identical across reruns of the same training
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for key in sorted(arrays):
            buf = io.BytesIO()
            _npformat.write_array(
                buf, np.ascontiguousarray(arrays[key]), allow_pickle=False
            )
            info = zipfile.ZipInfo(key + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def save_checkpoint(path, arrays: dict, meta: dict) -> tuple:
    """Persist probe state as an npz blob plus a JSON sidecar."""
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_suffix(".npz")
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_npz_deterministic(path, arrays)
    sidecar = path.with_suffix(".json")
    meta = dict(meta)
    meta["state_hash"] = state_hash(arrays)
    sidecar.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return path, sidecar


def load_checkpoint(path) -> tuple:
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_suffix(".npz")
    sidecar = path.with_suffix(".json")
    if not path.exists() or not sidecar.exists():
        raise StoreError(f"checkpoint incomplete: need both {path.name} and {sidecar.name}")
    with np.load(path) as blob:
        arrays = {key: blob[key] for key in blob.files}
    meta = json.loads(sidecar.read_text())
    expected = meta.get("state_hash")
    if expected is not None and state_hash(arrays) != expected:
        raise StoreError(f"checkpoint {path} does not match its recorded state hash")
    return arrays, meta
