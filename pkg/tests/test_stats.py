"""Statistics layer vs literal enumeration and algebraic fixtures."""

import itertools
import math

import numpy as np
import pytest

from vidbench.errors import DataError
from vidbench.metrics import MetricResult
from vidbench.stats import (
    CellTable,
    aggregate_cells,
    degradation_slope,
    paired_cell_diffs,
    radar_normalize,
    slope_result,
    wilcoxon_one_sided,
    write_table,
)


def _enumeration_p(diffs):
    """Literal 2^n enumeration of the signed-rank null, one-sided greater.

    Ranks magnitudes with average ranks on ties, then walks every sign
    assignment; p = fraction of assignments with W >= observed.
    """
    diffs = [d for d in diffs if d != 0.0]
    n = len(diffs)
    mags = [abs(d) for d in diffs]
    order = sorted(range(n), key=lambda i: mags[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and mags[order[j + 1]] == mags[order[i]]:
            j += 1
        avg = (i + j + 2) / 2  # ranks are 1-based
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    observed = sum(r for d, r in zip(diffs, ranks) if d > 0)
    count = 0
    for signs in itertools.product((0, 1), repeat=n):
        w = sum(r for s, r in zip(signs, ranks) if s)
        if w >= observed - 1e-12:
            count += 1
    return count / 2**n


class TestWilcoxonExact:
    def test_all_512_sign_patterns_match_enumeration(self):
        magnitudes = list(range(1, 10))
        for signs in itertools.product((1, -1), repeat=9):
            diffs = [s * m for s, m in zip(signs, magnitudes)]
            result = wilcoxon_one_sided(diffs)
            assert result.p_value == pytest.approx(_enumeration_p(diffs), abs=1e-12)

    def test_all_positive_nine_matches_published_row(self):
        result = wilcoxon_one_sided([1, 2, 3, 4, 5, 6, 7, 8, 9])
        assert result.statistic == 45.0
        assert result.p_value == pytest.approx(1.953125e-3, rel=1e-12)
        assert result.p_value == 1 / 512
        # 3 significant figures match the published 1.95e-3
        assert float(f"{result.p_value:.3g}") == 1.95e-3

    def test_tied_magnitudes_match_enumeration(self):
        for diffs in ([1, 1, -1, 2, 2], [0.5, -0.5, 0.5, 0.5], [3, 3, 3, -3, 1]):
            result = wilcoxon_one_sided(diffs)
            assert result.p_value == pytest.approx(_enumeration_p(diffs), abs=1e-12)

    def test_monotone_transform_invariance(self, rng):
        # the test depends only on signs and magnitude ranks
        diffs = rng.normal(size=12)
        stretched = np.sign(diffs) * (np.abs(diffs) ** 3 + np.abs(diffs))
        a = wilcoxon_one_sided(diffs)
        b = wilcoxon_one_sided(stretched)
        assert a.statistic == b.statistic and a.p_value == b.p_value

    def test_zeros_dropped_and_noted(self):
        result = wilcoxon_one_sided([0.0, 0.0, 1.0, 2.0])
        assert result.n == 2
        twin = wilcoxon_one_sided([1.0, 2.0])
        assert result.p_value == twin.p_value
        empty = wilcoxon_one_sided([0.0, 0.0])
        assert empty.p_value == 1.0 and empty.statistic == 0.0
        assert "n.s." in empty.note

    def test_mean_delta_includes_zeros(self):
        result = wilcoxon_one_sided([0.0, 2.0])
        assert result.mean_delta == 1.0

    def test_normal_approximation_agrees_with_exact_at_boundary(self):
        # n=20 supports both routes; approximation should land close
        diffs = [(-1) ** i * (i + 1) for i in range(20)]
        exact = wilcoxon_one_sided(diffs).p_value
        mean = 20 * 21 / 4
        var = 20 * 21 * 41 / 24
        w = sum(i + 1 for i in range(20) if i % 2 == 0)
        z = (w - mean - 0.5) / math.sqrt(var)
        approx = 0.5 * math.erfc(z / math.sqrt(2))
        assert approx == pytest.approx(exact, rel=0.05)

    def test_large_n_uses_normal_path(self):
        diffs = list(range(1, 31))
        result = wilcoxon_one_sided(diffs)
        assert 0 < result.p_value < 1e-4

    def test_empty_and_nonfinite_rejected(self):
        with pytest.raises(DataError):
            wilcoxon_one_sided([])
        with pytest.raises(DataError):
            wilcoxon_one_sided([1.0, float("nan")])


class TestSlope:
    def test_affine_recovery_exact(self, rng):
        for _ in range(10):
            a = float(rng.uniform(-5, 5))
            b = float(rng.uniform(-5, 5))
            xs = sorted(float(x) for x in rng.uniform(0, 10, size=5))
            curve = [(x, a * x + b) for x in xs]
            slope, r2 = degradation_slope(curve)
            assert slope == pytest.approx(a, abs=1e-12)
            assert r2 == pytest.approx(1.0, abs=1e-12)

    def test_zero_variance_response(self):
        result = slope_result([(1, 0.5), (3, 0.5), (5, 0.5)])
        assert result.statistic == 0.0
        assert result.r_squared == 0.0
        assert "degenerate" in result.note

    def test_matches_polyfit_oracle(self, rng):
        xs = [1.0, 3.0, 5.0]
        ys = list(rng.uniform(0, 1, 3))
        slope, r2 = degradation_slope(list(zip(xs, ys)))
        coeffs = np.polyfit(xs, ys, 1)
        pred = np.polyval(coeffs, xs)
        ss_res = float(((np.array(ys) - pred) ** 2).sum())
        ss_tot = float(((np.array(ys) - np.mean(ys)) ** 2).sum())
        assert slope == pytest.approx(float(coeffs[0]), abs=1e-9)
        assert r2 == pytest.approx(1 - ss_res / ss_tot, abs=1e-9)

    def test_degenerate_inputs_rejected(self):
        with pytest.raises(DataError):
            degradation_slope([(1.0, 0.5)])
        with pytest.raises(DataError):
            degradation_slope([(1.0, 0.5), (1.0, 0.6)])


class TestCellTable:
    def _records(self):
        rows = []
        for cond in ("a", "b"):
            for sev in (1, 3):
                rows.append(
                    MetricResult(
                        "rsi", 0.1 * (sev if cond == "a" else sev + 1),
                        group={"condition": cond, "severity": sev},
                    )
                )
        return rows

    def test_pivot_and_curves(self):
        table = aggregate_cells(self._records(), "condition", "severity", metric="rsi")
        assert tuple(table.rows) == ("a", "b")
        assert tuple(table.cols) == (1, 3)
        assert table.value("a", 3) == pytest.approx(0.3)
        assert table.row_curve("b") == [(1, pytest.approx(0.2)), (3, pytest.approx(0.4))]
        assert table.missing == []

    def test_identical_duplicates_collapse_conflicts_raise(self):
        records = self._records()
        table = aggregate_cells(records + records[:1], "condition", "severity")
        assert table.value("a", 1) == pytest.approx(0.1)
        clash = MetricResult("rsi", 0.9, group={"condition": "a", "severity": 1})
        with pytest.raises(DataError):
            aggregate_cells(records + [clash], "condition", "severity")

    def test_missing_cells_are_explicit(self):
        records = self._records()[:3]
        table = aggregate_cells(records, "condition", "severity")
        assert table.missing == [("b", 3)]

    def test_paired_diffs_row_major(self):
        table_a = aggregate_cells(self._records(), "condition", "severity")
        shifted = [
            MetricResult(
                "rsi", r.value + 0.05, group=dict(r.group)
            )
            for r in self._records()
        ]
        table_b = aggregate_cells(shifted, "condition", "severity")
        diffs, cells = paired_cell_diffs(table_b, table_a)
        assert cells == [("a", 1), ("a", 3), ("b", 1), ("b", 3)]
        assert all(d == pytest.approx(0.05) for d in diffs)

    def test_write_table_csv_and_sidecar(self, tmp_path):
        table = aggregate_cells(self._records(), "condition", "severity")
        path = tmp_path / "t.csv"
        write_table(table, path, conventions={"units": "cosine"})
        text = path.read_text().splitlines()
        assert text[0].split(",")[0] == "condition\\severity"
        sidecar = (tmp_path / "t.csv.json").read_text()
        assert '"units": "cosine"' in sidecar


class TestRadar:
    def test_max_maps_to_one_with_raw_extrema(self):
        out = radar_normalize({"axis1": {"e1": 0.2, "e2": 0.8}})
        assert out["axis1"]["normalized"]["e2"] == 1.0
        assert out["axis1"]["normalized"]["e1"] == 0.0
        assert out["axis1"]["raw_max"] == 0.8
        assert out["axis1"]["raw_min"] == 0.2
        assert out["axis1"]["degenerate"] is False

    def test_degenerate_axis_flagged(self):
        out = radar_normalize({"axis1": {"e1": 0.5, "e2": 0.5}})
        assert out["axis1"]["normalized"] == {"e1": 1.0, "e2": 1.0}
        assert out["axis1"]["degenerate"] is True
