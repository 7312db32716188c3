"""Probe readouts: attentive, linear, and kNN classifiers over frozen features."""

from ..errors import ConfigError
from .attentive import (
    AttentiveProbe,
    attentive_forward,
    attentive_loss_and_grads,
    init_attentive_params,
)
from .common import (
    PROBE_KINDS,
    ProbeConfig,
    ProbePrediction,
    load_checkpoint,
    prediction_from_logits,
    predictions_from_logits,
    save_checkpoint,
    softmax,
    state_hash,
    topk_indices,
)
from .knn import KnnProbe
from .linear import LinearProbe
from .sweep import DEFAULT_SWEEP_GRID, sweep_attentive

__all__ = [
    "DEFAULT_SWEEP_GRID",
    "PROBE_KINDS",
    "AttentiveProbe",
    "KnnProbe",
    "LinearProbe",
    "ProbeConfig",
    "ProbePrediction",
    "attentive_forward",
    "attentive_loss_and_grads",
    "build_probe",
    "init_attentive_params",
    "load_checkpoint",
    "load_probe",
    "prediction_from_logits",
    "predictions_from_logits",
    "save_checkpoint",
    "save_probe",
    "softmax",
    "state_hash",
    "sweep_attentive",
    "topk_indices",
]


def build_probe(config: ProbeConfig, n_classes: int | None = None):
    """Instantiate the estimator a ProbeConfig describes."""
    if config.kind == "attentive":
        return AttentiveProbe(
            n_classes=n_classes,
            depth=config.depth,
            heads=config.heads,
            mlp_ratio=config.mlp_ratio,
            standardize=config.standardize,
            lr=config.lr,
            epochs=config.epochs,
            batch=config.batch,
            weight_decay=config.weight_decay,
            seed=config.seed,
        )
    if config.kind == "linear":
        return LinearProbe(
            n_classes=n_classes,
            standardize=config.standardize,
            lr=config.lr,
            epochs=config.epochs,
            batch=config.batch,
            weight_decay=config.weight_decay,
            seed=config.seed,
        )
    if config.kind == "knn":
        return KnnProbe(n_classes=n_classes, k=config.k, standardize=config.standardize)
    raise ConfigError(f"unknown probe kind {config.kind!r}")


def save_probe(probe, path, selection: dict | None = None, extra_meta: dict | None = None):
    """Checkpoint a fitted probe: npz state blob plus JSON sidecar."""
    from .. import HARNESS_VERSION

    meta = {
        "kind": probe.kind,
        "params": probe.get_params(),
        "n_classes": int(probe.classes_.shape[0]),
        "training_curve": [float(v) for v in getattr(probe, "curve_", [])],
        "selection": selection,
        "harness_version": HARNESS_VERSION,
    }
    if extra_meta:
        meta.update(extra_meta)
    return save_checkpoint(path, probe.state_arrays(), meta)


def load_probe(path):
    """Reconstruct a fitted probe from a checkpoint pair."""
    arrays, meta = load_checkpoint(path)
    kind = meta.get("kind")
    classes = {"attentive": AttentiveProbe, "linear": LinearProbe, "knn": KnnProbe}
    if kind not in classes:
        raise ConfigError(f"checkpoint has unknown probe kind {kind!r}")
    probe = classes[kind](**meta.get("params", {}))
    probe.load_state_arrays(arrays)
    return probe
