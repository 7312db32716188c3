"""Axis orchestration: subset, perturb, encode, probe, metrics, stats.

Each axis run is deterministic given (config, seed, cache state): clip
iteration order is sorted, all randomness is derived from content-stable
seeds, and results files are rewritten from scratch, so a warm-cache rerun
produces byte-identical output.
"""

import json
from pathlib import Path

import numpy as np

from .. import HARNESS_VERSION
from .._util import parallel_map, sha256_hex
from ..dataset import (
    ClipManifest,
    VideoClip,
    load_clip,
    load_labels,
    load_manifest,
    load_taxonomy,
    pretend_subset,
    stratified_subset,
)
from ..dataset.taxonomy import bundled_labels_path
from ..encoders import create_encoder
from ..errors import AxisFailure, ConfigError, DataError, HarnessError
from ..metrics import (
    EmbeddingPair,
    MetricResult,
    anchor_cosines,
    auc_rsi,
    calibration_analysis,
    ccr,
    dscs,
    decoupling_index,
    family_dependency_drops,
    fisher_by_tier,
    frame_position_bias,
    grouped_accuracy,
    macro_micro_decomposition,
    mean_matrix_cosine,
    retention,
    rsi,
    semantic_flip_rate,
    temporal_consistency_bonus,
    temporal_dependency_index,
    topk_accuracy,
)
from ..perturb import (
    OCCLUSION_CONDITIONS,
    TEMPORAL_CONDITIONS,
    TEMPORAL_FAMILIES,
    PerturbationSpec,
    corruption_grid,
    occlusion_grid,
    temporal_grid,
)
from ..perturb import apply as apply_perturbation
from ..perturb.corruptions import CORRUPTION_TYPES
from ..perturb.spec import CORRUPTION_SEVERITIES
from ..probes import (
    AttentiveProbe,
    KnnProbe,
    LinearProbe,
    load_probe,
    save_probe,
    sweep_attentive,
)
from ..stats import slope_result, wilcoxon_one_sided
from ..store import CacheKey, EmbeddingStore, write_results
from .config import AXES, config_hash

PROBE_KINDS_TRAINED = ("attentive", "linear", "knn")


class StageLog:
    """Per-axis stage ledger for resumable aborts; never stores timestamps."""

    def __init__(self, path: Path, axis: str, cfg_hash: str):
        self.path = Path(path)
        self.axis = axis
        self.cfg_hash = cfg_hash
        self.stages: dict = {}

    def _write(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(
            json.dumps(
                {
                    "axis": self.axis,
                    "config_hash": self.cfg_hash,
                    "harness_version": HARNESS_VERSION,
                    "stages": self.stages,
                },
                sort_keys=True,
                indent=2,
            )
            + "\n"
        )

    def done(self, stage: str):
        self.stages[stage] = "done"
        self._write()

    def fail(self, stage: str, message: str):
        self.stages[stage] = f"failed: {message}"
        self._write()


def load_dataset(config: dict):
    """Manifest, label map, and taxonomy named by the config."""
    ds = config["dataset"]
    if not ds.get("manifest"):
        raise ConfigError("dataset.manifest is not set")
    labels_path = ds.get("labels") or bundled_labels_path()
    labels = load_labels(labels_path)
    manifest = load_manifest(ds["manifest"], labels)
    taxonomy = load_taxonomy(ds.get("taxonomy_dir"), labels=labels)
    return manifest, labels, taxonomy


def dataset_fingerprint(config: dict, manifest: ClipManifest) -> str:
    ds = config["dataset"]
    return sha256_hex(
        f"{manifest.content_hash()}|{ds['frame_count']}|{ds['decoder']}".encode()
    )[:16]


def subset_for_axis(config: dict, manifest: ClipManifest, taxonomy, axis: str) -> ClipManifest:
    spec = config["subsets"].get(axis)
    if spec is None:
        raise ConfigError(f"no subset spec for axis {axis!r}")
    split = config["eval_split"]
    seed = config["seed"]
    mode = spec.get("mode")
    if mode == "pretend":
        return pretend_subset(manifest, taxonomy, split=split)
    classes = spec.get("classes")
    if classes == "tiers":
        classes = taxonomy.tier_classes()
        if not classes:
            raise ConfigError("subset asks for tier classes but the taxonomy has none")
    elif classes is not None and not isinstance(classes, (list, tuple)):
        raise ConfigError(f"subset classes must be a list or 'tiers', got {classes!r}")
    if mode == "per_class":
        return stratified_subset(
            manifest, classes=classes, per_class=int(spec["per_class"]), split=split, seed=seed
        )
    if mode == "total":
        return stratified_subset(
            manifest, classes=classes, total=int(spec["total"]), split=split, seed=seed
        )
    raise ConfigError(f"unknown subset mode {mode!r} for axis {axis!r}")


def grid_for_axis(axis: str, seed: int) -> list:
    """Perturbation specs for one axis; the clean condition always leads."""
    clean = PerturbationSpec.clean(seed)
    if axis in ("discriminability", "pretend"):
        return [clean]
    if axis == "corruption":
        return [clean, *corruption_grid(seed)]
    if axis == "occlusion":
        return [clean, *occlusion_grid(seed)]
    if axis == "temporal":
        return [clean, *temporal_grid(seed)]
    raise ConfigError(f"unknown axis {axis!r}")


def encode_grid(config, store, dataset_hash, encoder, subset, specs, strict=False) -> tuple:
    """Embeddings for every (spec, clip) cell, via the cache.

    Returns ({spec_key: {clip_id: EmbeddingRecord}}, encode_call_count).
    Clips are decoded at most once each, and only on a cache miss. With
    ``strict`` a miss is an error instead: the analyse-only path must never
    silently start encoding.
    """
    ds = config["dataset"]
    video_root = ds.get("video_root")

    def work(entry):
        out = {}
        misses = 0
        decoded = None
        for spec in specs:
            key = CacheKey(dataset_hash, entry.clip_id, encoder.encoder_id, spec.key())
            if store.has(key):
                out[spec.key()] = store.get(key)
                continue
            if strict:
                raise DataError(
                    f"cache miss for clip {entry.clip_id!r} under {spec.key()!r}; "
                    "run extract or evaluate first"
                )
            if decoded is None:
                if video_root is None:
                    raise ConfigError("dataset.video_root is not set")
                decoded = load_clip(
                    video_root, entry, decoder=ds["decoder"], frame_count=ds["frame_count"]
                )
            frames = apply_perturbation(spec, decoded.frames, entry.clip_id)
            record = encoder.encode(
                VideoClip(clip_id=entry.clip_id, frames=frames, label=entry.class_id),
                perturbation_key=spec.key(),
            )
            store.put(key, record)
            misses += 1
            out[spec.key()] = record
        return out, misses

    per_clip = parallel_map(work, subset.entries, config["workers"])
    by_spec: dict = {spec.key(): {} for spec in specs}
    encode_calls = 0
    for entry, (out, misses) in zip(subset.entries, per_clip):
        encode_calls += misses
        for spec_key, record in out.items():
            by_spec[spec_key][record.clip_id] = record
    return by_spec, encode_calls


def _gap_matrix(records: dict, clip_ids) -> np.ndarray:
    return np.stack([records[c].gap_vector for c in clip_ids]).astype(np.float64)


def _token_stack(records: dict, clip_ids) -> np.ndarray:
    rows = []
    for c in clip_ids:
        record = records[c]
        if record.token_features is None:
            # pooled-only backbone: the GAP vector acts as a single token
            rows.append(record.gap_vector[None, :])
        else:
            rows.append(record.token_features)
    return np.stack(rows).astype(np.float64)


def _pairs(clean: dict, pert: dict, clip_ids, spec=None) -> list:
    return [
        EmbeddingPair(
            clip_id=c,
            f_clean=clean[c].gap_vector.astype(np.float64),
            f_pert=pert[c].gap_vector.astype(np.float64),
            spec=spec,
        )
        for c in clip_ids
    ]


def probe_checkpoint_dir(config: dict, encoder_id: str) -> Path:
    return Path(config["output_dir"]) / "probes" / encoder_id


def train_or_load_probes(
    config, store, dataset_hash, manifest, labels, taxonomy, encoder, strict=False
) -> dict:
    """Fit (or reload) the three probes on the clean training split.

    Probes are trained once per encoder on the full label space and shared
    by every axis; checkpoints make warm reruns and the `evaluate` stage
    independent of `train-probe`. Returns ({kind: probe}, encode_calls).
    """
    train_entries = sorted(
        manifest.for_split(config["train_split"]), key=lambda e: (e.class_id, e.clip_id)
    )
    if not train_entries:
        raise DataError(f"split {config['train_split']!r} has no clips to train probes on")
    train_subset = ClipManifest(
        entries=tuple(train_entries), labels=dict(manifest.labels), meta={}
    )
    n_classes = len(labels)
    probe_cfg = config["probe"]
    seed = config["seed"]
    ckpt_dir = probe_checkpoint_dir(config, encoder.encoder_id)

    probes = {}
    encode_calls = 0
    missing = [
        kind for kind in PROBE_KINDS_TRAINED if not (ckpt_dir / f"{kind}.npz").exists()
    ]
    if missing:
        clean_spec = PerturbationSpec.clean(seed)
        by_spec, encode_calls = encode_grid(
            config, store, dataset_hash, encoder, train_subset, [clean_spec], strict=strict
        )
        clean = by_spec[clean_spec.key()]
        clip_ids = [e.clip_id for e in train_entries]
        y = np.array([e.class_id for e in train_entries], dtype=np.int64)
        gap = _gap_matrix(clean, clip_ids)
        tokens = _token_stack(clean, clip_ids)

    for kind in PROBE_KINDS_TRAINED:
        path = ckpt_dir / f"{kind}.npz"
        if path.exists():
            probes[kind] = load_probe(path)
            continue
        selection = None
        if kind == "attentive":
            if probe_cfg.get("sweep"):
                probe, selection = _sweep_probe(
                    config, store, dataset_hash, manifest, encoder, tokens, y, n_classes
                )
            else:
                probe = AttentiveProbe(
                    n_classes=n_classes,
                    depth=int(probe_cfg["depth"]),
                    heads=int(probe_cfg["heads"]),
                    mlp_ratio=float(probe_cfg["mlp_ratio"]),
                    standardize=bool(probe_cfg["standardize"]),
                    lr=float(probe_cfg["lr"]),
                    epochs=int(probe_cfg["epochs"]),
                    batch=int(probe_cfg["batch"]),
                    weight_decay=float(probe_cfg["weight_decay"]),
                    seed=seed,
                ).fit(tokens, y)
        elif kind == "linear":
            probe = LinearProbe(
                n_classes=n_classes,
                standardize=bool(probe_cfg["standardize"]),
                lr=float(probe_cfg["lr"]),
                epochs=int(probe_cfg["epochs"]),
                batch=int(probe_cfg["batch"]),
                weight_decay=float(probe_cfg["weight_decay"]),
                seed=seed,
            ).fit(gap, y)
        else:
            k = min(int(probe_cfg["k"]), gap.shape[0])
            probe = KnnProbe(
                n_classes=n_classes, k=k, standardize=bool(probe_cfg["standardize"])
            ).fit(gap, y)
        save_probe(
            probe,
            path,
            selection=selection,
            extra_meta={"encoder": encoder.encoder_id, "dataset_hash": dataset_hash},
        )
        probes[kind] = probe
    return probes, encode_calls


def _sweep_probe(config, store, dataset_hash, manifest, encoder, tokens, y, n_classes):
    val_entries = sorted(manifest.for_split("val"), key=lambda e: (e.class_id, e.clip_id))
    if not val_entries:
        raise ConfigError("probe.sweep needs a non-empty 'val' split for selection")
    val_subset = ClipManifest(
        entries=tuple(val_entries), labels=dict(manifest.labels), meta={}
    )
    clean_spec = PerturbationSpec.clean(config["seed"])
    by_spec, _ = encode_grid(config, store, dataset_hash, encoder, val_subset, [clean_spec])
    clean = by_spec[clean_spec.key()]
    val_ids = [e.clip_id for e in val_entries]
    val_tokens = _token_stack(clean, val_ids)
    val_y = np.array([e.class_id for e in val_entries], dtype=np.int64)
    probe_cfg = config["probe"]
    return sweep_attentive(
        tokens,
        y,
        val_tokens,
        val_y,
        n_classes=n_classes,
        standardize=bool(probe_cfg["standardize"]),
        epochs=int(probe_cfg["epochs"]),
        batch=int(probe_cfg["batch"]),
        weight_decay=float(probe_cfg["weight_decay"]),
        seed=config["seed"],
    )


def _prediction_records(axis, encoder_id, spec_key, preds, y) -> list:
    return [
        {
            "kind": "prediction",
            "axis": axis,
            "encoder": encoder_id,
            "perturbation_key": spec_key,
            "clip_id": p.clip_id,
            "label": int(y[i]),
            "predicted": int(p.predicted),
            "confidence": float(p.confidence),
            "topk": [int(c) for c in p.topk],
        }
        for i, p in enumerate(preds)
    ]


class _AxisData:
    """Everything one encoder contributes to one axis, gathered upfront."""

    def __init__(self, axis, encoder_id, subset, specs, by_spec):
        self.axis = axis
        self.encoder_id = encoder_id
        self.specs = specs
        self.by_spec = by_spec
        self.clip_ids = [e.clip_id for e in subset.entries]
        self.y = np.array([e.class_id for e in subset.entries], dtype=np.int64)
        self.clean_key = specs[0].key()
        self.clean = by_spec[self.clean_key]

    def group(self, **extra) -> dict:
        g = {"axis": self.axis, "encoder": self.encoder_id}
        g.update(extra)
        return g

    def gap(self, spec_key=None) -> np.ndarray:
        return _gap_matrix(self.by_spec[spec_key or self.clean_key], self.clip_ids)

    def tokens(self, spec_key=None) -> np.ndarray:
        return _token_stack(self.by_spec[spec_key or self.clean_key], self.clip_ids)

    def pairs(self, spec) -> list:
        return _pairs(self.clean, self.by_spec[spec.key()], self.clip_ids, spec)


def _accuracy_records(data, probes, metrics, predictions, top5=True):
    """Clean top-1/top-5 per probe kind; returns the attentive clean top-1."""
    n_classes = int(probes["linear"].n_classes)
    clean_top1 = {}
    for kind in PROBE_KINDS_TRAINED:
        probe = probes[kind]
        X = data.tokens() if kind == "attentive" else data.gap()
        preds = probe.predictions(data.clip_ids, X)
        top1 = topk_accuracy(preds, data.y, k=1)
        clean_top1[kind] = top1
        metrics.append(
            MetricResult(
                "top1_accuracy",
                top1,
                group=data.group(probe=kind, condition="clean", severity=0),
                n=len(preds),
            )
        )
        if top5:
            k5 = min(5, n_classes)
            metrics.append(
                MetricResult(
                    "top5_accuracy",
                    topk_accuracy(preds, data.y, k=k5),
                    group=data.group(probe=kind, condition="clean", severity=0, k=k5),
                    n=len(preds),
                )
            )
        if kind == "attentive":
            predictions.extend(
                _prediction_records(data.axis, data.encoder_id, data.clean_key, preds, data.y)
            )
    return clean_top1


def _eval_discriminability(data, probes, taxonomy, metrics, stats, predictions):
    _accuracy_records(data, probes, metrics, predictions, top5=True)
    fisher = fisher_by_tier(data.gap(), data.y, taxonomy)
    metrics.append(
        MetricResult(
            "fisher_ratio",
            fisher["global"],
            group=data.group(scope="global"),
            n=len(data.clip_ids),
        )
    )
    for tier, summary in fisher["tiers"].items():
        metrics.append(
            MetricResult(
                "fisher_tier_mean",
                summary["mean"],
                group=data.group(tier=tier, n_classes=summary["n_classes"]),
                n=summary["n_samples"],
            )
        )
        metrics.append(
            MetricResult(
                "fisher_tier_std",
                summary["std"],
                group=data.group(tier=tier),
                n=summary["n_samples"],
            )
        )


def _eval_corruption(data, probes, metrics, stats, predictions):
    attentive = probes["attentive"]
    clean_preds = attentive.predictions(data.clip_ids, data.tokens())
    clean_acc = topk_accuracy(clean_preds, data.y, k=1)
    metrics.append(
        MetricResult(
            "top1_accuracy",
            clean_acc,
            group=data.group(probe="attentive", condition="clean", severity=0),
            n=len(data.clip_ids),
        )
    )
    retention_at_max = []
    for ctype in CORRUPTION_TYPES:
        acc_curve = []
        rsi_curve = []
        for severity in CORRUPTION_SEVERITIES:
            spec = next(
                s
                for s in data.specs
                if s.family == "corruption" and s.condition == ctype and s.severity == severity
            )
            cell = data.group(condition=ctype, severity=severity)
            value = rsi(data.pairs(spec))
            rsi_curve.append((severity, value))
            metrics.append(MetricResult("rsi", value, group=cell, n=len(data.clip_ids)))
            preds = attentive.predictions(data.clip_ids, data.tokens(spec.key()))
            acc = topk_accuracy(preds, data.y, k=1)
            acc_curve.append((severity, acc))
            metrics.append(
                MetricResult(
                    "top1_accuracy",
                    acc,
                    group=data.group(probe="attentive", condition=ctype, severity=severity),
                    n=len(data.clip_ids),
                )
            )
            kept = retention(acc, clean_acc) if clean_acc > 0 else None
            if kept is not None:
                metrics.append(
                    MetricResult("retention", kept, group=cell, n=len(data.clip_ids))
                )
                if severity == CORRUPTION_SEVERITIES[-1]:
                    retention_at_max.append(kept)
        metrics.append(
            MetricResult(
                "auc_rsi",
                auc_rsi(rsi_curve),
                group=data.group(condition=ctype),
                n=len(data.clip_ids),
            )
        )
        stats.append(
            slope_result(acc_curve, group=data.group(condition=ctype, response="top1_accuracy"))
        )
        stats.append(slope_result(rsi_curve, group=data.group(condition=ctype, response="rsi")))
    if retention_at_max:
        metrics.append(
            MetricResult(
                "mean_retention_max_severity",
                float(np.mean(retention_at_max)),
                group=data.group(severity=CORRUPTION_SEVERITIES[-1]),
                n=len(retention_at_max),
            )
        )


def _eval_pretend(data, probes, taxonomy, metrics, stats, predictions):
    attentive = probes["attentive"]
    preds = attentive.predictions(data.clip_ids, data.tokens())
    metrics.append(
        MetricResult(
            "top1_accuracy",
            topk_accuracy(preds, data.y, k=1),
            group=data.group(probe="attentive", condition="clean"),
            n=len(preds),
        )
    )
    predictions.extend(
        _prediction_records(data.axis, data.encoder_id, data.clean_key, preds, data.y)
    )
    for grouping, mapping in (
        ("object_size", taxonomy.object_size),
        ("detail_sensitivity", taxonomy.detail_sensitivity),
    ):
        for bucket, cell in sorted(grouped_accuracy(preds, data.y, mapping).items()):
            metrics.append(
                MetricResult(
                    "group_accuracy",
                    cell["accuracy"],
                    group=data.group(grouping=grouping, bucket=bucket),
                    n=cell["n"],
                )
            )
    report = calibration_analysis(preds, data.y)
    metrics.append(
        MetricResult(
            "confident_wrong_rate",
            report["confident_wrong_rate"],
            group=data.group(n_confident=report["n_confident"]),
            n=report["n"],
        )
    )
    for row in report["per_class"]:
        cell = data.group(class_id=row["class_id"], mean_confidence=row["mean_confidence"])
        metrics.append(MetricResult("class_accuracy", row["accuracy"], group=cell, n=row["n"]))
    metrics.append(
        MetricResult(
            "overconfident_class_count",
            float(len(report["overconfident_classes"])),
            group=data.group(
                class_ids=report["overconfident_classes"],
                hardest=report["hardest_classes"],
            ),
            n=report["n"],
        )
    )


def _eval_occlusion(data, probes, config, metrics, stats, predictions):
    attentive = probes["attentive"]
    clean_preds = attentive.predictions(data.clip_ids, data.tokens())
    clean_acc = topk_accuracy(clean_preds, data.y, k=1)
    metrics.append(
        MetricResult(
            "top1_accuracy",
            clean_acc,
            group=data.group(probe="attentive", condition="clean", severity=0),
            n=len(data.clip_ids),
        )
    )
    k = min(int(config["probe"]["k"]), len(data.clip_ids))
    knn_eval = KnnProbe(
        n_classes=int(attentive.n_classes),
        k=k,
        standardize=bool(config["probe"]["standardize"]),
    ).fit(data.gap(), data.y)
    auc_values = []
    for condition in OCCLUSION_CONDITIONS:
        cond_specs = [
            s for s in data.specs if s.family == "occlusion" and s.condition == condition
        ]
        rsi_curve = []
        ccr_curve = []
        for spec in cond_specs:
            cell = data.group(condition=condition, severity=spec.severity)
            pairs = data.pairs(spec)
            r = rsi(pairs)
            c = ccr(pairs, knn_eval)
            rsi_curve.append((spec.severity, r))
            ccr_curve.append((spec.severity, c))
            metrics.append(MetricResult("rsi", r, group=cell, n=len(pairs)))
            metrics.append(MetricResult("ccr", c, group=cell, n=len(pairs)))
            preds = attentive.predictions(data.clip_ids, data.tokens(spec.key()))
            acc = topk_accuracy(preds, data.y, k=1)
            metrics.append(
                MetricResult(
                    "top1_accuracy",
                    acc,
                    group=data.group(
                        probe="attentive", condition=condition, severity=spec.severity
                    ),
                    n=len(preds),
                )
            )
            if clean_acc > 0:
                metrics.append(
                    MetricResult(
                        "retention", retention(acc, clean_acc), group=cell, n=len(preds)
                    )
                )
        auc = auc_rsi(rsi_curve)
        auc_values.append(auc)
        metrics.append(
            MetricResult("auc_rsi", auc, group=data.group(condition=condition), n=len(data.clip_ids))
        )
        metrics.append(
            MetricResult(
                "decoupling_index",
                decoupling_index(ccr_curve, rsi_curve),
                group=data.group(condition=condition),
                n=len(data.clip_ids),
            )
        )
        stats.append(
            slope_result(rsi_curve, group=data.group(condition=condition, response="rsi"))
        )
    metrics.append(
        MetricResult(
            "mean_auc_rsi",
            float(np.mean(auc_values)),
            group=data.group(),
            n=len(auc_values),
        )
    )


def _eval_temporal(data, probes, taxonomy, metrics, stats, predictions):
    attentive = probes["attentive"]
    clean_preds = attentive.predictions(data.clip_ids, data.tokens())
    clean_acc = topk_accuracy(clean_preds, data.y, k=1)
    metrics.append(
        MetricResult(
            "top1_accuracy",
            clean_acc,
            group=data.group(probe="attentive", condition="clean"),
            n=len(data.clip_ids),
        )
    )
    predictions.extend(
        _prediction_records(data.axis, data.encoder_id, data.clean_key, clean_preds, data.y)
    )

    spec_of = {s.condition: s for s in data.specs if s.family == "temporal"}
    acc_of = {}
    cos_of = {}
    preds_of = {}
    clean_gap = data.gap()
    for condition in TEMPORAL_CONDITIONS:
        spec = spec_of[condition]
        preds = attentive.predictions(data.clip_ids, data.tokens(spec.key()))
        preds_of[condition] = preds
        acc = topk_accuracy(preds, data.y, k=1)
        acc_of[condition] = acc
        cos = mean_matrix_cosine(clean_gap, data.gap(spec.key()))
        cos_of[condition] = cos
        cell = data.group(condition=condition)
        metrics.append(
            MetricResult(
                "top1_accuracy",
                acc,
                group=data.group(probe="attentive", condition=condition),
                n=len(preds),
            )
        )
        metrics.append(MetricResult("condition_cosine", cos, group=cell, n=len(preds)))
        if clean_acc > 0:
            metrics.append(
                MetricResult("retention", retention(acc, clean_acc), group=cell, n=len(preds))
            )

    family_accs = {
        family: [acc_of[c] for c in members]
        for family, members in TEMPORAL_FAMILIES.items()
        if family != "reversal"
    }
    drops = family_dependency_drops(clean_acc, family_accs)
    for family, drop in drops.items():
        metrics.append(
            MetricResult(
                "family_dependency_drop", drop, group=data.group(family=family), n=len(data.clip_ids)
            )
        )
    metrics.append(
        MetricResult(
            "temporal_dependency_index",
            temporal_dependency_index(clean_acc, family_accs),
            group=data.group(),
            n=len(data.clip_ids),
        )
    )

    reversal_preds = preds_of["reversal"]
    predictions.extend(
        _prediction_records(
            data.axis, data.encoder_id, spec_of["reversal"].key(), reversal_preds, data.y
        )
    )
    r_sem = semantic_flip_rate(clean_preds, reversal_preds, taxonomy.antonym)
    cos_rev = cos_of["reversal"]
    metrics.append(
        MetricResult("semantic_flip_rate", r_sem, group=data.group(), n=len(data.clip_ids))
    )
    metrics.append(
        MetricResult(
            "dscs",
            dscs(r_sem, cos_rev),
            group=data.group(semantic_flip_rate=r_sem, reversal_cosine=cos_rev),
            n=len(data.clip_ids),
        )
    )

    metrics.append(
        MetricResult(
            "temporal_consistency_bonus",
            temporal_consistency_bonus(
                cos_of["static_gaussian_noise"], cos_of["gaussian_noise"]
            ),
            group=data.group(
                static_cosine=cos_of["static_gaussian_noise"],
                varying_cosine=cos_of["gaussian_noise"],
            ),
            n=len(data.clip_ids),
        )
    )

    static_by_anchor = {
        anchor: data.gap(spec_of[f"static_{anchor}"].key())
        for anchor in ("first", "middle", "last")
    }
    cosines = anchor_cosines(clean_gap, static_by_anchor)
    for anchor, value in sorted(cosines.items()):
        metrics.append(
            MetricResult("anchor_cosine", value, group=data.group(anchor=anchor), n=len(data.clip_ids))
        )
    metrics.append(
        MetricResult(
            "spatial_grounding_index",
            max(cosines.values()),
            group=data.group(),
            n=len(data.clip_ids),
        )
    )
    bias = frame_position_bias(
        {anchor: acc_of[f"static_{anchor}"] for anchor in ("first", "middle", "last")}
    )
    metrics.append(
        MetricResult(bias.metric, bias.value, group=data.group(**bias.group), n=bias.n)
    )

    macro, micro = macro_micro_decomposition(
        cos_of["segment_shuffle"], cos_of["random_shuffle"]
    )
    metrics.append(
        MetricResult("macro_order_penalty", macro, group=data.group(), n=len(data.clip_ids))
    )
    metrics.append(
        MetricResult("micro_order_penalty", micro, group=data.group(), n=len(data.clip_ids))
    )


def _cross_encoder_stats(axis, config, metric_records, stat_records):
    """Paired signed-rank comparisons on the occlusion RSI grid.

    The reference encoder (config report.reference_encoder, defaulting to
    the first configured encoder) is tested one-sided against every other
    encoder over the condition-by-severity cells.
    """
    if axis != "occlusion":
        return
    encoder_ids = []
    for record in metric_records:
        enc = record.group.get("encoder")
        if enc and enc not in encoder_ids:
            encoder_ids.append(enc)
    if len(encoder_ids) < 2:
        return
    reference = config["report"].get("reference_encoder") or encoder_ids[0]
    if reference not in encoder_ids:
        raise ConfigError(f"reference encoder {reference!r} was not evaluated")

    def rsi_cells(enc):
        # severity scales differ across conditions, so cells pair by the
        # per-condition severity order, not by raw severity value
        values = {}
        for m in metric_records:
            if m.metric == "rsi" and m.group.get("encoder") == enc:
                values[(m.group["condition"], float(m.group["severity"]))] = m.value
        ordered = []
        for condition in OCCLUSION_CONDITIONS:
            for severity in sorted(s for c, s in values if c == condition):
                ordered.append(((condition, severity), values[(condition, severity)]))
        return ordered

    ref_cells = rsi_cells(reference)
    for other in encoder_ids:
        if other == reference:
            continue
        other_cells = rsi_cells(other)
        if [c for c, _ in other_cells] != [c for c, _ in ref_cells]:
            raise DataError(
                f"occlusion grids differ between {other!r} and {reference!r}"
            )
        diffs = [b - a for (_, b), (_, a) in zip(other_cells, ref_cells)]
        stat_records.append(
            wilcoxon_one_sided(
                diffs,
                group={
                    "axis": axis,
                    "a": other,
                    "b": reference,
                    "metric": "rsi",
                    "alternative": "a_greater",
                    "n_cells": len(diffs),
                },
            )
        )


def run_axis(config: dict, axis: str, strict_cache: bool = False) -> dict:
    """Evaluate one robustness axis for every configured encoder.

    Writes <output_dir>/results/<axis>.jsonl (meta record first, then
    metrics, stats, predictions) and a stage log. Raises AxisFailure when
    any stage past configuration fails, leaving the log in place so a rerun
    can reuse every cached embedding and probe checkpoint. ``strict_cache``
    turns any embedding-cache miss into an error (analysis without encoding).
    """
    if axis not in AXES:
        raise ConfigError(f"unknown axis {axis!r}; expected one of {', '.join(AXES)}")
    out_dir = Path(config["output_dir"])
    cfg_hash = config_hash(config)
    log = StageLog(out_dir / "state" / f"{axis}.json", axis, cfg_hash)
    stage = "load_dataset"
    try:
        manifest, labels, taxonomy = load_dataset(config)
        dataset_hash = dataset_fingerprint(config, manifest)
        log.done(stage)

        stage = "subset"
        subset = subset_for_axis(config, manifest, taxonomy, axis)
        specs = grid_for_axis(axis, config["seed"])
        log.done(stage)

        store = EmbeddingStore(config["cache_root"])
        metric_records: list = []
        stat_records: list = []
        prediction_records: list = []
        encode_calls = 0
        encoder_ids = []
        for enc_cfg in config["encoders"]:
            encoder = create_encoder(enc_cfg["name"], **enc_cfg.get("options", {}))
            encoder_ids.append(encoder.encoder_id)

            stage = f"probes:{encoder.encoder_id}"
            probes, calls = train_or_load_probes(
                config, store, dataset_hash, manifest, labels, taxonomy, encoder,
                strict=strict_cache,
            )
            encode_calls += calls
            log.done(stage)

            stage = f"encode:{encoder.encoder_id}"
            by_spec, calls = encode_grid(
                config, store, dataset_hash, encoder, subset, specs, strict=strict_cache
            )
            encode_calls += calls
            log.done(stage)

            stage = f"evaluate:{encoder.encoder_id}"
            data = _AxisData(axis, encoder.encoder_id, subset, specs, by_spec)
            if axis == "discriminability":
                _eval_discriminability(
                    data, probes, taxonomy, metric_records, stat_records, prediction_records
                )
            elif axis == "corruption":
                _eval_corruption(data, probes, metric_records, stat_records, prediction_records)
            elif axis == "pretend":
                _eval_pretend(
                    data, probes, taxonomy, metric_records, stat_records, prediction_records
                )
            elif axis == "occlusion":
                _eval_occlusion(
                    data, probes, config, metric_records, stat_records, prediction_records
                )
            else:
                _eval_temporal(
                    data, probes, taxonomy, metric_records, stat_records, prediction_records
                )
            log.done(stage)

        stage = "cross_encoder_stats"
        _cross_encoder_stats(axis, config, metric_records, stat_records)
        log.done(stage)

        stage = "write_results"
        meta = {
            "kind": "meta",
            "axis": axis,
            "harness_version": HARNESS_VERSION,
            "config_hash": cfg_hash,
            "dataset_hash": dataset_hash,
            "encoders": encoder_ids,
            "n_clips": len(subset.entries),
            "subset": subset.meta,
            "perturbations": [s.key() for s in specs],
        }
        results_path = out_dir / "results" / f"{axis}.jsonl"
        write_results(
            results_path, [meta, *metric_records, *stat_records, *prediction_records]
        )
        log.done(stage)
    except ConfigError:
        raise
    except HarnessError as exc:
        log.fail(stage, str(exc))
        raise AxisFailure(f"axis {axis!r} failed at stage {stage!r}: {exc}") from exc
    return {
        "axis": axis,
        "results_path": str(results_path),
        "n_clips": len(subset.entries),
        "n_conditions": len(specs),
        "n_records": 1 + len(metric_records) + len(stat_records) + len(prediction_records),
        "encode_calls": encode_calls,
        "encoders": encoder_ids,
    }


def run_all(config: dict, strict_cache: bool = False) -> dict:
    """Run every configured axis in declaration order."""
    from .config import dump_resolved

    dump_resolved(config)
    summaries = {}
    for axis in config["axes"]:
        summaries[axis] = run_axis(config, axis, strict_cache=strict_cache)
    return summaries


def extract_embeddings(config: dict, axes=None) -> dict:
    """Populate the embedding cache for the chosen axes without evaluating."""
    manifest, labels, taxonomy = load_dataset(config)
    dataset_hash = dataset_fingerprint(config, manifest)
    store = EmbeddingStore(config["cache_root"])
    out = {}
    for axis in axes or config["axes"]:
        if axis not in AXES:
            raise ConfigError(f"unknown axis {axis!r}")
        subset = subset_for_axis(config, manifest, taxonomy, axis)
        specs = grid_for_axis(axis, config["seed"])
        calls = 0
        cells = 0
        for enc_cfg in config["encoders"]:
            encoder = create_encoder(enc_cfg["name"], **enc_cfg.get("options", {}))
            _, n = encode_grid(config, store, dataset_hash, encoder, subset, specs)
            calls += n
            cells += len(subset.entries) * len(specs)
        out[axis] = {"encode_calls": calls, "cells": cells}
    return out
