"""Report emission: tables and plot-ready data from per-axis results logs.

Every table is CSV (values via repr for round-trip fidelity) with JSON
sidecars where grid metadata matters. Numeric emission has no graphics
dependency; PNG rendering is best-effort and skipped with a warning when
matplotlib is unavailable.
"""

import csv
import json
from pathlib import Path

from .. import HARNESS_VERSION
from ..errors import DataError
from ..perturb import OCCLUSION_CONDITIONS, TEMPORAL_CONDITIONS
from ..perturb.corruptions import CORRUPTION_TYPES
from ..stats import CellTable, aggregate_cells, radar_normalize, write_table
from ..store import read_results
from .config import AXES, config_hash

RADAR_SOURCES = {
    "discriminability": ("top1_accuracy", {"probe": "linear", "condition": "clean"}),
    "corruption": ("mean_retention_max_severity", {}),
    "pretend": ("top1_accuracy", {"probe": "attentive", "condition": "clean"}),
    "occlusion": ("mean_auc_rsi", {}),
    "temporal": ("temporal_dependency_index", {}),
}


class _Record:
    """Thin attribute view over a results-log dict, for aggregate_cells."""

    def __init__(self, raw: dict):
        self.metric = raw.get("metric")
        self.value = raw.get("value")
        self.group = raw.get("group", {})
        self.n = raw.get("n", 0)


def _matches(record: dict, **filters) -> bool:
    group = record.get("group", {})
    for key, want in filters.items():
        have = record.get(key, group.get(key))
        if have != want:
            return False
    return True


def _metrics(records, metric: str, **filters) -> list:
    return [
        r
        for r in records
        if r.get("kind") == "metric" and r.get("metric") == metric and _matches(r, **filters)
    ]


def _stats(records, test: str, **filters) -> list:
    return [
        r
        for r in records
        if r.get("kind") == "stat" and r.get("test") == test and _matches(r, **filters)
    ]


def _encoders_in(records) -> list:
    seen = []
    for r in records:
        enc = r.get("group", {}).get("encoder") or r.get("encoder")
        if enc and enc not in seen:
            seen.append(enc)
    return sorted(seen)


def _write_csv(path: Path, header: list, rows: list):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [repr(v) if isinstance(v, float) else v for v in row]
            )


def _severity_curves(by_axis, out_dir, written):
    rows = []
    for axis in ("corruption", "occlusion"):
        records = by_axis.get(axis)
        if not records:
            continue
        for metric in ("rsi", "ccr", "top1_accuracy", "retention"):
            for r in _metrics(records, metric):
                g = r["group"]
                if "severity" not in g or g.get("condition") in (None, "clean"):
                    continue
                rows.append(
                    (
                        axis,
                        g["encoder"],
                        metric,
                        g["condition"],
                        g["severity"],
                        float(r["value"]),
                        int(r.get("n", 0)),
                    )
                )
    if rows:
        rows.sort(key=lambda t: (t[0], t[1], t[2], t[3], float(t[4])))
        path = out_dir / "severity_curves.csv"
        _write_csv(
            path,
            ["axis", "encoder", "metric", "condition", "severity", "value", "n"],
            rows,
        )
        written.append(path.name)


def _retention_heatmaps(by_axis, out_dir, written, warnings):
    records = by_axis.get("corruption")
    if not records:
        return
    for encoder in _encoders_in(records):
        cells = [
            _Record(r)
            for r in _metrics(records, "retention", encoder=encoder)
            if r["group"].get("condition") != "clean"
        ]
        if not cells:
            warnings.append(f"corruption retention missing for {encoder}")
            continue
        table = aggregate_cells(cells, "condition", "severity", metric="retention")
        path = out_dir / f"retention_heatmap_{encoder}.csv"
        write_table(table, path, conventions={"values": "percent of clean accuracy"})
        written.append(path.name)


def _occlusion_slopes(by_axis, out_dir, written):
    records = by_axis.get("occlusion")
    if not records:
        return
    slopes = _stats(records, "ols_slope", response="rsi")
    if not slopes:
        return
    encoders = sorted({s["group"]["encoder"] for s in slopes})
    conditions = [c for c in OCCLUSION_CONDITIONS]
    values = {}
    r2 = {}
    for s in slopes:
        cell = (s["group"]["encoder"], s["group"]["condition"])
        values[cell] = float(s["statistic"])
        r2[cell] = float(s["r_squared"])
    for name, grid in (("occlusion_slopes", values), ("occlusion_slopes_r2", r2)):
        table = CellTable(
            row_key="encoder",
            col_key="condition",
            metric=name,
            rows=encoders,
            cols=conditions,
            values=grid,
            counts={cell: 1 for cell in grid},
        )
        path = out_dir / f"{name}.csv"
        write_table(
            table,
            path,
            conventions={"response": "rsi", "regressor": "occlusion ratio"},
        )
        written.append(path.name)
    long_rows = sorted(
        (
            s["group"]["encoder"],
            s["group"]["condition"],
            float(s["statistic"]),
            float(s["r_squared"]),
            int(s["n"]),
            s.get("note", ""),
        )
        for s in slopes
    )
    path = out_dir / "slopes_long.csv"
    _write_csv(path, ["encoder", "condition", "slope", "r_squared", "n", "note"], long_rows)
    written.append(path.name)


def _wilcoxon_table(by_axis, out_dir, written, alpha):
    rows = []
    for axis in AXES:
        records = by_axis.get(axis)
        if not records:
            continue
        for s in _stats(records, "wilcoxon_one_sided"):
            g = s["group"]
            p = s.get("p_value")
            rows.append(
                (
                    axis,
                    g.get("a", ""),
                    g.get("b", ""),
                    g.get("metric", ""),
                    int(s["n"]),
                    float(s["statistic"]),
                    float(p) if p is not None else "",
                    float(s["mean_delta"]) if s.get("mean_delta") is not None else "",
                    bool(p is not None and p < alpha),
                    s.get("note", ""),
                )
            )
    if rows:
        rows.sort(key=lambda t: (t[0], t[1], t[2]))
        path = out_dir / "wilcoxon.csv"
        _write_csv(
            path,
            [
                "axis",
                "encoder_a",
                "encoder_b",
                "metric",
                "n",
                "w_statistic",
                "p_value",
                "mean_delta",
                f"significant_at_{alpha:g}",
                "note",
            ],
            rows,
        )
        written.append(path.name)


def _worst_case(by_axis, out_dir, written):
    records = by_axis.get("occlusion")
    if not records:
        return
    rows = []
    for encoder in _encoders_in(records):
        clean = _metrics(
            records, "top1_accuracy", encoder=encoder, probe="attentive", condition="clean"
        )
        clean_acc = float(clean[0]["value"]) if clean else None
        cells = [
            r
            for r in _metrics(records, "top1_accuracy", encoder=encoder, probe="attentive")
            if r["group"].get("condition") != "clean"
        ]
        if not cells:
            continue
        worst = min(
            cells, key=lambda r: (float(r["value"]), r["group"]["condition"], r["group"]["severity"])
        )
        kept = (
            100.0 * float(worst["value"]) / clean_acc if clean_acc else ""
        )
        rows.append(
            (
                encoder,
                worst["group"]["condition"],
                worst["group"]["severity"],
                float(worst["value"]),
                clean_acc if clean_acc is not None else "",
                kept,
            )
        )
    if rows:
        rows.sort()
        path = out_dir / "worst_case.csv"
        _write_csv(
            path,
            ["encoder", "condition", "severity", "top1_accuracy", "clean_top1", "retention"],
            rows,
        )
        written.append(path.name)


def _reversal_triplet(by_axis, out_dir, written):
    records = by_axis.get("temporal")
    if not records:
        return
    rows = []
    for encoder in _encoders_in(records):
        flips = _metrics(records, "semantic_flip_rate", encoder=encoder)
        cosines = _metrics(records, "condition_cosine", encoder=encoder, condition="reversal")
        scores = _metrics(records, "dscs", encoder=encoder)
        if not (flips and cosines and scores):
            continue
        rows.append(
            (
                encoder,
                float(flips[0]["value"]),
                float(cosines[0]["value"]),
                float(scores[0]["value"]),
            )
        )
    if rows:
        rows.sort()
        path = out_dir / "reversal.csv"
        _write_csv(
            path, ["encoder", "semantic_flip_rate", "reversal_cosine", "dscs"], rows
        )
        written.append(path.name)


def _pretend_tables(by_axis, out_dir, written):
    records = by_axis.get("pretend")
    if not records:
        return
    group_rows = sorted(
        (
            r["group"]["encoder"],
            r["group"]["grouping"],
            r["group"]["bucket"],
            float(r["value"]),
            int(r["n"]),
        )
        for r in _metrics(records, "group_accuracy")
    )
    if group_rows:
        path = out_dir / "pretend_groups.csv"
        _write_csv(path, ["encoder", "grouping", "bucket", "accuracy", "n"], group_rows)
        written.append(path.name)
    cal_rows = sorted(
        (
            r["group"]["encoder"],
            int(r["group"]["class_id"]),
            float(r["value"]),
            float(r["group"]["mean_confidence"]),
            int(r["n"]),
        )
        for r in _metrics(records, "class_accuracy")
    )
    if cal_rows:
        path = out_dir / "calibration.csv"
        _write_csv(
            path, ["encoder", "class_id", "accuracy", "mean_confidence", "n"], cal_rows
        )
        written.append(path.name)


def _fisher_table(by_axis, out_dir, written):
    records = by_axis.get("discriminability")
    if not records:
        return
    rows = []
    for r in _metrics(records, "fisher_ratio"):
        rows.append((r["group"]["encoder"], "global", float(r["value"]), "", int(r["n"])))
    stds = {
        (r["group"]["encoder"], r["group"]["tier"]): float(r["value"])
        for r in _metrics(records, "fisher_tier_std")
    }
    for r in _metrics(records, "fisher_tier_mean"):
        key = (r["group"]["encoder"], r["group"]["tier"])
        rows.append((key[0], key[1], float(r["value"]), stds.get(key, ""), int(r["n"])))
    if rows:
        rows.sort(key=lambda t: (t[0], t[1]))
        path = out_dir / "fisher.csv"
        _write_csv(path, ["encoder", "scope", "mean", "std", "n"], rows)
        written.append(path.name)


def _temporal_signatures(by_axis, out_dir, written):
    records = by_axis.get("temporal")
    if not records:
        return

    def one(encoder, metric, **extra):
        hits = _metrics(records, metric, encoder=encoder, **extra)
        return float(hits[0]["value"]) if hits else ""

    rows = []
    for encoder in _encoders_in(records):
        bias = _metrics(records, "frame_position_bias", encoder=encoder)
        rows.append(
            (
                encoder,
                one(encoder, "temporal_dependency_index"),
                one(encoder, "temporal_consistency_bonus"),
                one(encoder, "spatial_grounding_index"),
                float(bias[0]["value"]) if bias else "",
                bias[0]["group"].get("anchor", "") if bias else "",
                one(encoder, "macro_order_penalty"),
                one(encoder, "micro_order_penalty"),
                one(encoder, "semantic_flip_rate"),
                one(encoder, "condition_cosine", condition="reversal"),
                one(encoder, "dscs"),
            )
        )
    if rows:
        rows.sort()
        path = out_dir / "temporal_signatures.csv"
        _write_csv(
            path,
            [
                "encoder",
                "temporal_dependency_index",
                "temporal_consistency_bonus",
                "spatial_grounding_index",
                "frame_position_bias",
                "preferred_anchor",
                "macro_order_penalty",
                "micro_order_penalty",
                "semantic_flip_rate",
                "reversal_cosine",
                "dscs",
            ],
            rows,
        )
        written.append(path.name)


def _radar(by_axis, out_dir, written, warnings):
    scores: dict = {}
    for axis, (metric, filters) in RADAR_SOURCES.items():
        records = by_axis.get(axis)
        if not records:
            continue
        per_encoder = {}
        for r in _metrics(records, metric, **filters):
            value = float(r["value"])
            if axis == "temporal":
                # dependency is good news on this axis: invert the drop
                value = 1.0 - value
            per_encoder[r["group"]["encoder"]] = value
        if per_encoder:
            scores[axis] = per_encoder
        else:
            warnings.append(f"radar source {metric!r} missing for axis {axis!r}")
    if not scores:
        return None
    normalized = radar_normalize(scores)
    encoders = sorted({enc for per in scores.values() for enc in per})
    axes_present = [a for a in AXES if a in normalized]
    rows = []
    for enc in encoders:
        rows.append(
            (
                enc,
                *[
                    normalized[a]["normalized"].get(enc, "")
                    for a in axes_present
                ],
            )
        )
    path = out_dir / "radar.csv"
    _write_csv(path, ["encoder", *axes_present], rows)
    written.append(path.name)
    payload = {
        "axes": {
            axis: {
                "normalized": dict(sorted(normalized[axis]["normalized"].items())),
                "raw": dict(sorted(scores[axis].items())),
                "raw_max": normalized[axis]["raw_max"],
                "raw_min": normalized[axis]["raw_min"],
                "degenerate": normalized[axis]["degenerate"],
            }
            for axis in axes_present
        },
        "convention": "per axis, best encoder maps to 1.0; raw extrema retained",
        "harness_version": HARNESS_VERSION,
    }
    json_path = out_dir / "radar.json"
    json_path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    written.append(json_path.name)
    return normalized


def _cross_condition(by_axis, out_dir, written):
    """Encoder-by-condition accuracy heatmap across every perturbed axis."""
    cells = {}
    encoders = set()
    cols = []
    sources = (
        ("corruption", CORRUPTION_TYPES),
        ("occlusion", OCCLUSION_CONDITIONS),
        ("temporal", TEMPORAL_CONDITIONS),
    )
    for axis, conditions in sources:
        records = by_axis.get(axis)
        if not records:
            continue
        for condition in conditions:
            col = f"{axis}:{condition}"
            per_enc: dict = {}
            for r in _metrics(
                records, "top1_accuracy", probe="attentive", condition=condition
            ):
                enc = r["group"]["encoder"]
                per_enc.setdefault(enc, []).append(float(r["value"]))
            for enc, values in per_enc.items():
                cells[(enc, col)] = sum(values) / len(values)
                encoders.add(enc)
            if per_enc and col not in cols:
                cols.append(col)
    if not cells:
        return
    table = CellTable(
        row_key="encoder",
        col_key="condition",
        metric="mean_top1_accuracy",
        rows=sorted(encoders),
        cols=cols,
        values=cells,
        counts={cell: 1 for cell in cells},
    )
    path = out_dir / "cross_condition.csv"
    write_table(table, path, conventions={"values": "mean top-1 accuracy over severities"})
    written.append(path.name)


def _drop_scatter(by_axis, out_dir, written):
    """Accuracy drop vs embedding-cosine drop, one point per perturbed cell."""
    rows = []
    for axis in ("corruption", "occlusion", "temporal"):
        records = by_axis.get(axis)
        if not records:
            continue
        for encoder in _encoders_in(records):
            clean = _metrics(
                records, "top1_accuracy", encoder=encoder, probe="attentive", condition="clean"
            )
            if not clean:
                continue
            clean_acc = float(clean[0]["value"])
            sim_metric = "condition_cosine" if axis == "temporal" else "rsi"
            sims = {
                (r["group"]["condition"], r["group"].get("severity", 0)): float(r["value"])
                for r in _metrics(records, sim_metric, encoder=encoder)
            }
            for r in _metrics(records, "top1_accuracy", encoder=encoder, probe="attentive"):
                g = r["group"]
                cell = (g.get("condition"), g.get("severity", 0))
                if cell[0] in (None, "clean") or cell not in sims:
                    continue
                rows.append(
                    (
                        axis,
                        encoder,
                        cell[0],
                        cell[1],
                        clean_acc - float(r["value"]),
                        1.0 - sims[cell],
                    )
                )
    if rows:
        rows.sort(key=lambda t: (t[0], t[1], t[2], float(t[3])))
        path = out_dir / "drop_scatter.csv"
        _write_csv(
            path,
            ["axis", "encoder", "condition", "severity", "accuracy_drop", "cosine_drop"],
            rows,
        )
        written.append(path.name)


def _render_plots(by_axis, radar, out_dir, written, warnings):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        warnings.append("matplotlib unavailable; skipped plot rendering")
        return
    plots = out_dir / "plots"
    plots.mkdir(parents=True, exist_ok=True)

    if radar:
        axes_present = sorted(radar)
        encoders = sorted({e for a in axes_present for e in radar[a]["normalized"]})
        import math

        angles = [2 * math.pi * i / len(axes_present) for i in range(len(axes_present))]
        fig, ax = plt.subplots(subplot_kw={"projection": "polar"}, figsize=(6, 6))
        for enc in encoders:
            values = [radar[a]["normalized"].get(enc, 0.0) for a in axes_present]
            ax.plot(angles + angles[:1], values + values[:1], label=enc)
        ax.set_xticks(angles)
        ax.set_xticklabels(axes_present)
        ax.set_ylim(0, 1.05)
        ax.legend(loc="lower right", fontsize=7)
        fig.savefig(plots / "radar.png", dpi=120, bbox_inches="tight")
        plt.close(fig)
        written.append("plots/radar.png")

    for axis, metric in (("corruption", "rsi"), ("occlusion", "rsi")):
        records = by_axis.get(axis)
        if not records:
            continue
        fig, ax = plt.subplots(figsize=(6, 4))
        plotted = False
        for encoder in _encoders_in(records):
            curves: dict = {}
            for r in _metrics(records, metric, encoder=encoder):
                g = r["group"]
                if g.get("condition") in (None, "clean"):
                    continue
                curves.setdefault(g["condition"], []).append(
                    (float(g["severity"]), float(r["value"]))
                )
            for condition, points in sorted(curves.items()):
                points.sort()
                ax.plot(
                    [p[0] for p in points],
                    [p[1] for p in points],
                    marker="o",
                    label=f"{encoder}:{condition}",
                )
                plotted = True
        if plotted:
            ax.set_xlabel("severity")
            ax.set_ylabel(metric)
            ax.set_title(f"{axis} severity curves")
            ax.legend(fontsize=6)
            fig.savefig(plots / f"{axis}_curves.png", dpi=120, bbox_inches="tight")
            written.append(f"plots/{axis}_curves.png")
        plt.close(fig)

    scatter_path = out_dir / "drop_scatter.csv"
    if scatter_path.exists():
        with scatter_path.open() as fh:
            reader = csv.DictReader(fh)
            points = [
                (float(row["cosine_drop"]), float(row["accuracy_drop"]), row["axis"])
                for row in reader
            ]
        if points:
            fig, ax = plt.subplots(figsize=(5, 5))
            for axis in sorted({p[2] for p in points}):
                xs = [p[0] for p in points if p[2] == axis]
                ys = [p[1] for p in points if p[2] == axis]
                ax.scatter(xs, ys, s=12, label=axis)
            ax.set_xlabel("cosine drop")
            ax.set_ylabel("accuracy drop")
            ax.legend(fontsize=7)
            fig.savefig(plots / "drop_scatter.png", dpi=120, bbox_inches="tight")
            plt.close(fig)
            written.append("plots/drop_scatter.png")


def report(config: dict) -> dict:
    """Emit every table class from whatever axis results exist.

    Missing axes produce explicit gaps in warnings.json rather than errors,
    so partial runs still report. Requires at least one axis present.
    """
    out_root = Path(config["output_dir"])
    results_dir = out_root / "results"
    out_dir = out_root / "report"
    out_dir.mkdir(parents=True, exist_ok=True)

    by_axis = {}
    warnings = []
    for axis in AXES:
        path = results_dir / f"{axis}.jsonl"
        if path.exists():
            by_axis[axis] = read_results(path)
        else:
            warnings.append(f"axis {axis!r} has no results file; sections skipped")
    if not any(by_axis.values()):
        raise DataError(f"no axis results found under {results_dir}")

    written: list = []
    _severity_curves(by_axis, out_dir, written)
    _retention_heatmaps(by_axis, out_dir, written, warnings)
    _occlusion_slopes(by_axis, out_dir, written)
    _wilcoxon_table(by_axis, out_dir, written, float(config["report"]["alpha"]))
    _worst_case(by_axis, out_dir, written)
    _reversal_triplet(by_axis, out_dir, written)
    _pretend_tables(by_axis, out_dir, written)
    _fisher_table(by_axis, out_dir, written)
    _temporal_signatures(by_axis, out_dir, written)
    radar = _radar(by_axis, out_dir, written, warnings)
    _cross_condition(by_axis, out_dir, written)
    _drop_scatter(by_axis, out_dir, written)
    if config["report"].get("plots", True):
        _render_plots(by_axis, radar, out_dir, written, warnings)

    payload = {
        "axes_present": sorted(a for a, r in by_axis.items() if r),
        "config_hash": config_hash(config),
        "harness_version": HARNESS_VERSION,
        "warnings": warnings,
        "written": written,
    }
    (out_dir / "warnings.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n"
    )
    written.append("warnings.json")
    return payload
