"""MetricResult record type shared by all metric producers."""

import math
from dataclasses import dataclass, field

from ..errors import DataError

# Closed ranges enforced at construction for metrics with a bounded codomain.
METRIC_RANGES = {
    "rsi": (-1.0, 1.0),
    "auc_rsi": (-1.0, 1.0),
    "ccr": (0.0, 1.0),
    "dscs": (0.0, 2.0),
    "semantic_flip_rate": (0.0, 1.0),
    "decoupling_index": (0.0, 2.0),
    "temporal_dependency_index": (0.0, 1.0),
    "top1_accuracy": (0.0, 1.0),
    "top5_accuracy": (0.0, 1.0),
    "confident_wrong_rate": (0.0, 1.0),
}

_RANGE_TOL = 1e-9


@dataclass(frozen=True)
class MetricResult:
    """One scalar metric value plus its grouping coordinates."""

    metric: str
    value: float
    group: dict = field(default_factory=dict)
    n: int = 0

    def __post_init__(self):
        if not self.metric:
            raise DataError("metric name must be non-empty")
        value = float(self.value)
        if not math.isfinite(value):
            raise DataError(f"{self.metric}: value must be finite, got {value!r}")
        bounds = METRIC_RANGES.get(self.metric)
        if bounds is not None:
            lo, hi = bounds
            if value < lo - _RANGE_TOL or value > hi + _RANGE_TOL:
                raise DataError(
                    f"{self.metric}: value {value} outside [{lo}, {hi}]"
                )
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "group", dict(self.group))
        if self.n < 0:
            raise DataError("sample count must be non-negative")

    def to_record(self) -> dict:
        return {
            "kind": "metric",
            "metric": self.metric,
            "value": self.value,
            "group": dict(self.group),
            "n": int(self.n),
        }
