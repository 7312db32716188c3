"""Pivoting metric record streams into tables, diffs, and radar scores."""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DataError


def _axis_sort_key(value):
    try:
        return (0, float(value), "")
    except (TypeError, ValueError):
        return (1, 0.0, str(value))


@dataclass(frozen=True)
class CellTable:
    """Dense 2-D pivot of one metric; absent cells are explicit, never zero."""

    row_key: str
    col_key: str
    metric: str
    rows: tuple
    cols: tuple
    values: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)

    @property
    def missing(self) -> list:
        return [
            (r, c) for r in self.rows for c in self.cols if (r, c) not in self.values
        ]

    def value(self, row, col):
        return self.values.get((row, col))

    def row_curve(self, row) -> list:
        """(col, value) points for one row, skipping absent cells."""
        return [
            (c, self.values[(row, c)]) for c in self.cols if (row, c) in self.values
        ]


def aggregate_cells(records, row_key: str, col_key: str, metric: str | None = None) -> CellTable:
    """Pivot MetricResult records on two grouping keys.

    Duplicate cells with identical values collapse; conflicting duplicates
    are an error because silently keeping either would corrupt downstream
    statistics.
    """
    values: dict = {}
    counts: dict = {}
    name = metric
    for record in records:
        if metric is not None and record.metric != metric:
            continue
        if name is None:
            name = record.metric
        elif record.metric != name:
            raise DataError(
                f"mixed metrics in one table: {name!r} vs {record.metric!r}; pass metric="
            )
        group = record.group
        if row_key not in group or col_key not in group:
            raise DataError(
                f"record lacks grouping keys {row_key!r}/{col_key!r}: {sorted(group)}"
            )
        cell = (group[row_key], group[col_key])
        if cell in values and values[cell] != record.value:
            raise DataError(
                f"conflicting duplicate cell {cell}: {values[cell]} vs {record.value}"
            )
        values[cell] = record.value
        counts[cell] = record.n
    if not values:
        raise DataError(f"no records matched metric {metric!r}")
    rows = tuple(sorted({r for r, _ in values}, key=_axis_sort_key))
    cols = tuple(sorted({c for _, c in values}, key=_axis_sort_key))
    return CellTable(
        row_key=row_key,
        col_key=col_key,
        metric=name,
        rows=rows,
        cols=cols,
        values=values,
        counts=counts,
    )


def paired_cell_diffs(table_a: CellTable, table_b: CellTable) -> tuple:
    """Per-cell table_a minus table_b over the shared dense grid.

    Returns (diffs, cells) in deterministic row-major order, ready for the
    signed-rank test. Grids must match exactly; a partial overlap would
    silently change N.
    """
    if (table_a.rows, table_a.cols) != (table_b.rows, table_b.cols):
        raise DataError("tables are not on the same grid")
    if table_a.missing or table_b.missing:
        raise DataError("cannot diff tables with missing cells")
    cells = [(r, c) for r in table_a.rows for c in table_a.cols]
    diffs = [table_a.values[cell] - table_b.values[cell] for cell in cells]
    return diffs, cells


def write_table(table: CellTable, path, conventions: dict | None = None) -> tuple:
    """Emit a CellTable as CSV plus a JSON metadata sidecar."""
    from .. import HARNESS_VERSION

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"{table.row_key}\\{table.col_key}", *table.cols])
        for row in table.rows:
            cells = [
                "" if (row, c) not in table.values else repr(table.values[(row, c)])
                for c in table.cols
            ]
            writer.writerow([row, *cells])
    sidecar = path.with_suffix(path.suffix + ".json")
    sidecar.write_text(
        json.dumps(
            {
                "metric": table.metric,
                "row_key": table.row_key,
                "col_key": table.col_key,
                "rows": list(table.rows),
                "cols": list(table.cols),
                "missing_cells": [list(cell) for cell in table.missing],
                "conventions": conventions or {},
                "harness_version": HARNESS_VERSION,
            },
            sort_keys=True,
            indent=2,
        )
        + "\n"
    )
    return path, sidecar


def radar_normalize(scores: dict) -> dict:
    """Min-max normalise per axis so the best encoder sits at 1.0.

    ``scores`` maps axis -> {encoder: raw value}. Raw extrema are recorded
    alongside so the normalised chart stays auditable. A degenerate axis
    (all values equal) normalises to 1.0 everywhere and is flagged.
    """
    out = {}
    for axis in sorted(scores):
        per_encoder = scores[axis]
        if not per_encoder:
            raise DataError(f"axis {axis!r} has no scores")
        raw = {enc: float(v) for enc, v in per_encoder.items()}
        lo, hi = min(raw.values()), max(raw.values())
        if hi == lo:
            normalized = {enc: 1.0 for enc in raw}
            degenerate = True
        else:
            normalized = {enc: (v - lo) / (hi - lo) for enc, v in raw.items()}
            degenerate = False
        out[axis] = {
            "normalized": normalized,
            "raw_max": hi,
            "raw_min": lo,
            "degenerate": degenerate,
        }
    return out
