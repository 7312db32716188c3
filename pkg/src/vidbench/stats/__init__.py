"""Statistical layer: slope regression, signed-rank testing, aggregation."""

from .aggregate import (
    CellTable,
    aggregate_cells,
    paired_cell_diffs,
    radar_normalize,
    write_table,
)
from .regression import degradation_slope, slope_result
from .result import StatResult
from .wilcoxon import EXACT_LIMIT, wilcoxon_one_sided

__all__ = [
    "EXACT_LIMIT",
    "CellTable",
    "StatResult",
    "aggregate_cells",
    "degradation_slope",
    "paired_cell_diffs",
    "radar_normalize",
    "slope_result",
    "wilcoxon_one_sided",
    "write_table",
]
