"""Acceptance gate: one test per shipped guarantee, each printing a single
pass/fail line under ``pytest -v``.

Criteria covered, at their stated tolerances and runtime budgets:

1. perturbation invariants on 20 seeded synthetic clips (< 60 s)
2. metric equivalence against brute-force oracles, 1e-9 (< 30 s)
3. signed-rank exactness over every sign pattern of nine diffs
4. slope recovery to 1e-12 with R^2 = 1 plus the slope-grid table shape
5. attentive probe: gradient check, separable fit, eval purity
6. kNN probe: exhaustive-scan equality and rescaling invariance
7. end-to-end smoke on all five axes with a byte-identical warm rerun
8. full-scale regression anchors, only with user-supplied real data
"""

import hashlib
import itertools
import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import build_config
from vidbench.dataset import make_synthetic_dataset
from vidbench.metrics import (
    EmbeddingPair,
    auc_rsi,
    ccr,
    decoupling_index,
    dscs,
    fisher_ratio,
    macro_micro_decomposition,
    rsi,
)
from vidbench.perturb import (
    GREY,
    OCCLUSION_CONDITIONS,
    TEMPORAL_FAMILIES,
    PerturbationSpec,
    apply,
    apply_moving_block,
    apply_patch_dropout,
    apply_temporal_dropout,
    corruption_grid,
    occlusion_grid,
    temporal_grid,
)
from vidbench.pipeline import load_config, report, resolve, run_axis
from vidbench.pipeline.axes import run_all
from vidbench.probes import (
    AttentiveProbe,
    KnnProbe,
    attentive_loss_and_grads,
    init_attentive_params,
)
from vidbench.probes.common import fit_standardizer
from vidbench.stats import degradation_slope, wilcoxon_one_sided
from vidbench.store import read_results

FULL_SCALE_ENV = "FULL_SCALE_DATA_ROOT"

EXPECTED_METRICS = {
    "discriminability": {
        "top1_accuracy",
        "top5_accuracy",
        "fisher_ratio",
        "fisher_tier_mean",
        "fisher_tier_std",
    },
    "corruption": {
        "top1_accuracy",
        "rsi",
        "retention",
        "auc_rsi",
        "mean_retention_max_severity",
    },
    "pretend": {
        "top1_accuracy",
        "group_accuracy",
        "confident_wrong_rate",
        "class_accuracy",
        "overconfident_class_count",
    },
    "occlusion": {
        "top1_accuracy",
        "rsi",
        "ccr",
        "retention",
        "auc_rsi",
        "decoupling_index",
        "mean_auc_rsi",
    },
    "temporal": {
        "top1_accuracy",
        "condition_cosine",
        "retention",
        "family_dependency_drop",
        "temporal_dependency_index",
        "semantic_flip_rate",
        "dscs",
        "temporal_consistency_bonus",
        "anchor_cosine",
        "spatial_grounding_index",
        "frame_position_bias",
        "macro_order_penalty",
        "micro_order_penalty",
    },
}

EXPECTED_TABLES = (
    "severity_curves.csv",
    "occlusion_slopes.csv",
    "occlusion_slopes_r2.csv",
    "slopes_long.csv",
    "wilcoxon.csv",
    "worst_case.csv",
    "reversal.csv",
    "pretend_groups.csv",
    "calibration.csv",
    "fisher.csv",
    "temporal_signatures.csv",
    "radar.csv",
    "radar.json",
    "cross_condition.csv",
    "drop_scatter.csv",
    "warnings.json",
)

EXPECTED_PLOTS = (
    "plots/radar.png",
    "plots/corruption_curves.png",
    "plots/occlusion_curves.png",
    "plots/drop_scatter.png",
)


def _tree_snapshot(root: Path) -> dict:
    """Relative path -> bytes for every non-raster file under ``root``."""
    out = {}
    for path in sorted(root.rglob("*")):
        if path.is_file() and path.suffix != ".png":
            out[str(path.relative_to(root))] = path.read_bytes()
    return out


@pytest.fixture(scope="module")
def smoke(tmp_path_factory):
    """Full five-axis run on synthetic data, then a warm rerun of the same."""
    made = make_synthetic_dataset(tmp_path_factory.mktemp("accept-synth"))
    out = Path(tmp_path_factory.mktemp("accept-run"))
    config = build_config(
        made,
        out,
        encoders=[
            {"name": "toy", "options": {"dim": 32, "seed": 0}},
            {"name": "toy", "options": {"dim": 32, "seed": 1}},
        ],
        probe={"epochs": 6},
    )
    start = time.monotonic()
    summaries = run_all(config)
    payload = report(config)
    elapsed = time.monotonic() - start

    cold_tree = _tree_snapshot(out)
    warm_summaries = run_all(config)
    warm_payload = report(config)
    warm_tree = _tree_snapshot(out)
    return {
        "config": config,
        "out": out,
        "summaries": summaries,
        "payload": payload,
        "elapsed": elapsed,
        "cold_tree": cold_tree,
        "warm_tree": warm_tree,
        "warm_summaries": warm_summaries,
        "warm_payload": warm_payload,
    }


def _frame_hashes(clip):
    return sorted(
        hashlib.sha256(np.ascontiguousarray(f).tobytes()).hexdigest() for f in clip
    )


def test_criterion_1_perturbation_invariants():
    start = time.monotonic()
    rng = np.random.default_rng(20260816)
    clips = []
    for _ in range(20):
        clip = rng.integers(0, 256, size=(16, 64, 64, 3), dtype=np.int64)
        # keep 0 and the occlusion grey out of the payload so fill budgets count exactly
        clip[clip == 0] = 1
        clip[clip == GREY] = GREY + 1
        clips.append(clip.astype(np.uint8))

    specs = [
        PerturbationSpec.clean(42),
        *corruption_grid(42),
        *occlusion_grid(42),
        *temporal_grid(42),
    ]
    assert len(specs) == 38
    permutations = set(TEMPORAL_FAMILIES["shuffle"]) | set(TEMPORAL_FAMILIES["reversal"])
    reversal_spec = next(s for s in specs if s.condition == "reversal")

    for idx, clip in enumerate(clips):
        cid = f"accept-{idx:02d}"
        baseline = _frame_hashes(clip)
        assert len(set(baseline)) == 16  # distinct frames make budgets observable

        # identity at zero severity
        np.testing.assert_array_equal(apply(PerturbationSpec.clean(), clip, cid), clip)
        np.testing.assert_array_equal(apply_moving_block(clip, 0.0), clip)
        np.testing.assert_array_equal(
            apply_temporal_dropout(clip, 0.0, np.random.default_rng(0)), clip
        )
        np.testing.assert_array_equal(
            apply_patch_dropout(clip, 0.0, rng=np.random.default_rng(0)), clip
        )

        for spec in specs:
            out = apply(spec, clip, cid)
            again = apply(spec, clip, cid)
            assert out.tobytes() == again.tobytes()  # bit-exact determinism
            assert out.shape == clip.shape and out.dtype == np.uint8

            if spec.family == "occlusion" and spec.condition == "moving_block":
                side = int(round(float(spec.severity) * 64))
                for t in range(16):
                    grey = np.all(out[t] == GREY, axis=-1)
                    assert grey.sum() == side * side
            elif spec.family == "occlusion" and spec.condition == "temporal_dropout":
                budget = int(float(spec.severity) * 16)
                replaced = [
                    t for t in range(16) if not np.array_equal(out[t], clip[t])
                ]
                assert len(replaced) == budget
                assert replaced == list(range(replaced[0], replaced[0] + budget))
                assert replaced[0] >= 1
                for t in replaced:
                    np.testing.assert_array_equal(out[t], clip[replaced[0] - 1])
            elif spec.family == "occlusion" and spec.condition == "patch_dropout":
                cells = out.reshape(8, 2, 4, 16, 4, 16, 3)
                zeroed = np.all(cells == 0, axis=(1, 3, 5, 6))
                assert zeroed.sum() == int(round(float(spec.severity) * 128))
            elif spec.family == "temporal" and spec.condition in permutations:
                assert _frame_hashes(out) == baseline

        # reversal involution: applying it twice restores the clip
        np.testing.assert_array_equal(
            apply(reversal_spec, apply(reversal_spec, clip, cid), cid), clip
        )

    assert time.monotonic() - start < 60.0


def test_criterion_2_metric_oracle_equivalence():
    start = time.monotonic()
    tol = 1e-9
    rng = np.random.default_rng(7)

    def cosine(u, v):
        num = sum(float(a) * float(b) for a, b in zip(u, v))
        den = math.sqrt(sum(float(a) ** 2 for a in u)) * math.sqrt(
            sum(float(b) ** 2 for b in v)
        )
        return num / den

    # RSI: mean clean/perturbed cosine
    clean = rng.normal(size=(40, 12))
    pert = clean + 0.3 * rng.normal(size=(40, 12))
    pairs = [EmbeddingPair(f"c{i}", clean[i], pert[i]) for i in range(40)]
    oracle = sum(cosine(p.f_clean, p.f_pert) for p in pairs) / len(pairs)
    assert abs(rsi(pairs) - oracle) < tol

    # CCR: exact fraction of unchanged kNN labels (counting metric)
    X = rng.normal(size=(30, 12))
    y = rng.integers(0, 3, size=30)
    probe = KnnProbe(n_classes=3, k=5).fit(X, y)
    sub = pairs[:20]
    before = probe.predict(np.stack([p.f_clean for p in sub]))
    after = probe.predict(np.stack([p.f_pert for p in sub]))
    assert ccr(sub, probe) == sum(1.0 for a, b in zip(before, after) if a == b) / 20

    # AUC over severity, normalised, with a unit anchor at severity zero
    sev = [1.0, 3.0, 5.0]
    vals = [float(v) for v in rng.uniform(0.2, 1.0, size=3)]
    xs, ys = [0.0] + sev, [1.0] + vals
    trapezoid = sum(
        (xs[i + 1] - xs[i]) * (ys[i + 1] + ys[i]) / 2 for i in range(len(xs) - 1)
    )
    assert abs(auc_rsi(list(zip(sev, vals))) - trapezoid / max(xs)) < tol

    # DSCS: flip rate gated by how far reversal moved the embedding
    assert abs(dscs(0.62, 0.41) - 0.62 * (1 - 0.41)) < tol

    # DI: mean absolute CCR-RSI gap across severities
    c = [float(v) for v in rng.uniform(0, 1, size=3)]
    r = [float(v) for v in rng.uniform(0, 1, size=3)]
    want = sum(abs(a - b) for a, b in zip(c, r)) / 3
    assert abs(decoupling_index(list(zip(sev, c)), list(zip(sev, r))) - want) < tol

    # Fisher ratio: literal scatter traces after scalar standardisation
    Xf = rng.normal(size=(40, 7))
    yf = rng.integers(0, 4, size=40)
    while min(np.bincount(yf)) < 2:
        yf = rng.integers(0, 4, size=40)
    Z = Xf - Xf.mean(axis=0)
    Z = Z / math.sqrt(float((Z**2).mean()))
    mu = Z.mean(axis=0)
    between = within = 0.0
    for cls in np.unique(yf):
        zc = Z[yf == cls]
        mc = zc.mean(axis=0)
        between += len(zc) * float(((mc - mu) ** 2).sum())
        within += float(((zc - mc) ** 2).sum())
    assert abs(fisher_ratio(Xf, yf) - between / (within + 1e-8)) < tol

    # macro/micro split of an accuracy decomposition
    macro, micro = macro_micro_decomposition(0.83, 0.61)
    assert abs(macro - (1 - 0.83)) < tol
    assert abs(micro - (0.83 - 0.61)) < tol

    assert time.monotonic() - start < 30.0


def test_criterion_3_wilcoxon_exactness():
    def enumeration_p(diffs):
        # literal 2^n walk of the signed-rank null, one-sided greater
        mags = [abs(d) for d in diffs]
        n = len(diffs)
        order = sorted(range(n), key=lambda i: mags[i])
        ranks = [0.0] * n
        i = 0
        while i < n:
            j = i
            while j + 1 < n and mags[order[j + 1]] == mags[order[i]]:
                j += 1
            for k in range(i, j + 1):
                ranks[order[k]] = (i + j + 2) / 2
            i = j + 1
        observed = sum(r for d, r in zip(diffs, ranks) if d > 0)
        hits = 0
        for signs in itertools.product((0, 1), repeat=n):
            w = sum(r for s, r in zip(signs, ranks) if s)
            if w >= observed - 1e-12:
                hits += 1
        return hits / 2**n

    for pattern in itertools.product((1.0, -1.0), repeat=9):
        diffs = list(pattern)
        result = wilcoxon_one_sided(diffs)
        assert abs(result.p_value - enumeration_p(diffs)) < 1e-12

    all_positive = wilcoxon_one_sided([1.0] * 9)
    assert all_positive.statistic == 45.0
    assert abs(all_positive.p_value - 1.953125e-3) < 1e-12  # exactly 1/512
    assert f"{all_positive.p_value:.2e}" == "1.95e-03"  # 3 significant figures


def test_criterion_4_slope_recovery_and_table_structure(smoke):
    rng = np.random.default_rng(4)
    for _ in range(20):
        a = float(rng.uniform(-5, 5))
        b = float(rng.uniform(-5, 5))
        xs = sorted(float(x) for x in rng.uniform(0, 10, size=6))
        slope, r2 = degradation_slope([(x, a * x + b) for x in xs])
        assert abs(slope - a) < 1e-12
        assert abs(r2 - 1.0) < 1e-12

    # slope grid: one column per occlusion family, one row per encoder
    lines = (smoke["out"] / "report" / "occlusion_slopes.csv").read_text().splitlines()
    header = lines[0].split(",")
    assert header[0] == "encoder\\condition"
    assert header[1:] == list(OCCLUSION_CONDITIONS)
    assert len(OCCLUSION_CONDITIONS) == 3
    body = [line.split(",") for line in lines[1:]]
    assert [row[0] for row in body] == ["toy-d32-s0", "toy-d32-s1"]
    for row in body:
        assert len(row) == 4
        for cell in row[1:]:
            assert math.isfinite(float(cell))


def test_criterion_5_attentive_probe():
    # fixed draw keeps every parameter's gradient large enough that central
    # differences at eps=5e-6 stay above float64 roundoff
    rng = np.random.default_rng(1234)

    # analytic gradients against central finite differences on a micro-probe
    dim, heads, depth, n_classes = 4, 2, 2, 3
    params = init_attentive_params(dim, n_classes, depth, heads, 2.0, seed=7)
    params["head.weight"] = rng.normal(size=params["head.weight"].shape) * 0.3
    params["head.bias"] = rng.normal(size=params["head.bias"].shape) * 0.1
    tokens = rng.normal(size=(2, 3, dim))
    y = np.array([0, 2])
    _, grads = attentive_loss_and_grads(params, tokens, y, depth, heads)
    eps = 5e-6
    worst = 0.0
    for name in sorted(params):
        flat = params[name].reshape(-1)
        g = grads[name].reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + eps
            up, _ = attentive_loss_and_grads(params, tokens, y, depth, heads)
            flat[i] = keep - eps
            down, _ = attentive_loss_and_grads(params, tokens, y, depth, heads)
            flat[i] = keep
            fd = (up - down) / (2 * eps)
            worst = max(worst, abs(fd - g[i]) / max(abs(fd), abs(g[i]), 1e-8))
    assert worst < 1e-4

    # full accuracy on linearly separable tokens within 50 epochs
    X = rng.normal(size=(24, 6, 12)) * 0.1
    labels = np.repeat(np.arange(3), 8)
    for cls in range(3):
        X[labels == cls, :, cls] += 4.0
    probe = AttentiveProbe(
        n_classes=3, depth=1, heads=2, mlp_ratio=2.0, lr=5e-3, epochs=50, batch=8, seed=0
    ).fit(X, labels)
    assert (probe.predict(X) == labels).all()

    # evaluation must not move the trained state
    before = probe.state_hash()
    probe.predict(X)
    probe.predict_proba(X)
    probe.predictions([f"c{i}" for i in range(len(X))], X)
    assert probe.state_hash() == before


def test_criterion_6_knn_probe():
    rng = np.random.default_rng(6)
    n_ref = n_query = 200
    dim, n_classes, k = 16, 5, 5
    X = rng.normal(size=(n_ref, dim))
    y = rng.integers(0, n_classes, size=n_ref)
    Q = rng.normal(size=(n_query, dim))
    probe = KnnProbe(n_classes=n_classes, k=k).fit(X, y)

    # exhaustive cosine scan over standardised points, documented tie-breaks
    mean, std = fit_standardizer(X)
    refs = (X - mean) / std
    refs /= np.linalg.norm(refs, axis=1, keepdims=True)
    queries = (Q - mean) / std
    queries /= np.linalg.norm(queries, axis=1, keepdims=True)
    want = []
    for q in queries:
        sims = refs @ q
        order = np.argsort(-sims, kind="stable")[:k]
        votes = np.bincount(y[order], minlength=n_classes)
        tied = [c for c in range(n_classes) if votes[c] == votes.max()]
        if len(tied) > 1:
            nearest = {
                c: max(sims[i] for i in order if y[i] == c) for c in tied
            }
            top = max(nearest.values())
            tied = [c for c in tied if nearest[c] == top]
        want.append(min(tied))
    np.testing.assert_array_equal(probe.predict(Q), np.array(want))

    # uniform rescaling of train and query space changes nothing
    rescaled = KnnProbe(n_classes=n_classes, k=k).fit(X * 55.0, y)
    np.testing.assert_array_equal(
        probe.predict_logits(Q), rescaled.predict_logits(Q * 55.0)
    )


def test_criterion_7_end_to_end_smoke(smoke):
    assert smoke["elapsed"] < 300.0

    summaries = smoke["summaries"]
    assert sorted(summaries) == sorted(EXPECTED_METRICS)
    for axis, summary in summaries.items():
        assert summary["n_clips"] == (4 if axis == "pretend" else 8)
        assert summary["encode_calls"] > 0 or axis != "discriminability"

    # complete results tree: every metric family present, every value finite
    for axis, expected in EXPECTED_METRICS.items():
        records = read_results(Path(summaries[axis]["results_path"]))
        assert records[0]["kind"] == "meta"
        metric_records = [r for r in records if r.get("kind") == "metric"]
        names = {r["metric"] for r in metric_records}
        assert expected <= names, f"{axis} missing {expected - names}"
        for r in metric_records:
            assert np.isfinite(r["value"]), (axis, r["metric"])

    stat_tests = {
        r.get("test")
        for axis in summaries
        for r in read_results(Path(summaries[axis]["results_path"]))
        if r.get("kind") == "stat"
    }
    assert {"ols_slope", "wilcoxon_one_sided"} <= stat_tests

    # report emits every table class plus plots
    payload = smoke["payload"]
    assert not [w for w in payload["warnings"] if "has no results file" in w]
    report_dir = smoke["out"] / "report"
    for name in EXPECTED_TABLES + EXPECTED_PLOTS:
        assert (report_dir / name).is_file(), name
    for encoder in ("toy-d32-s0", "toy-d32-s1"):
        assert (report_dir / f"retention_heatmap_{encoder}.csv").is_file()

    # warm rerun: zero encode calls and a byte-identical tree
    assert sum(s["encode_calls"] for s in smoke["warm_summaries"].values()) == 0
    assert smoke["warm_payload"]["written"] == payload["written"]
    cold, warm = smoke["cold_tree"], smoke["warm_tree"]
    assert sorted(cold) == sorted(warm)
    for rel in cold:
        assert cold[rel] == warm[rel], f"{rel} changed on warm rerun"


@pytest.mark.skipif(
    FULL_SCALE_ENV not in os.environ,
    reason=f"full-scale anchors need real encoder checkpoints; set {FULL_SCALE_ENV}",
)
def test_criterion_8_full_scale_anchors():
    """Regression anchors for user-supplied real checkpoints.

    Expects $FULL_SCALE_DATA_ROOT/config.yaml naming real encoder adapters
    and the full-scale dataset. Checks the worst-case table structure and
    that any encoder whose patch-dropout cell at ratio 0.5 shows stable
    geometry (RSI > 0.9) with unstable decisions (CCR < 0.15) carries the
    largest decoupling index. Cell values are preprocessing-sensitive, so
    thresholds are loosened by 5 percentage points.
    """
    tol_pp = 0.05
    root = Path(os.environ[FULL_SCALE_ENV])
    config = resolve(load_config(str(root / "config.yaml")))
    summary = run_axis(config, "occlusion")
    records = read_results(Path(summary["results_path"]))
    payload = report(config)
    assert "worst_case.csv" in payload["written"]

    worst = (Path(config["output_dir"]) / "report" / "worst_case.csv").read_text()
    lines = worst.splitlines()
    assert lines[0].split(",")[:3] == ["encoder", "condition", "severity"]
    assert len(lines) - 1 == len(summary["encoders"])

    def metric_value(encoder, metric, condition, severity):
        for r in records:
            if (
                r.get("kind") == "metric"
                and r["metric"] == metric
                and r["group"].get("encoder") == encoder
                and r["group"].get("condition") == condition
                and float(r["group"].get("severity", -1)) == severity
            ):
                return float(r["value"])
        return None

    di = {}
    decoupled = []
    for encoder in summary["encoders"]:
        values = [
            float(r["value"])
            for r in records
            if r.get("kind") == "metric"
            and r["metric"] == "decoupling_index"
            and r["group"].get("encoder") == encoder
        ]
        assert values, f"decoupling index missing for {encoder}"
        di[encoder] = max(values)
        cell_rsi = metric_value(encoder, "rsi", "patch_dropout", 0.5)
        cell_ccr = metric_value(encoder, "ccr", "patch_dropout", 0.5)
        assert cell_rsi is not None and cell_ccr is not None
        if cell_rsi > 0.9 - tol_pp and cell_ccr < 0.15 + tol_pp:
            decoupled.append(encoder)

    for encoder in decoupled:
        assert di[encoder] == max(di.values()), (
            f"{encoder} shows stable-geometry/unstable-decision cells but is "
            "not the decoupling-index outlier"
        )
