"""StatResult record type for regression and rank-test outputs."""

import math
from dataclasses import dataclass, field

from ..errors import DataError


@dataclass(frozen=True)
class StatResult:
    """One statistical test outcome with its grouping coordinates."""

    test: str
    statistic: float
    n: int
    p_value: float | None = None
    r_squared: float | None = None
    mean_delta: float | None = None
    group: dict = field(default_factory=dict)
    note: str = ""

    def __post_init__(self):
        if not self.test:
            raise DataError("test name must be non-empty")
        if not math.isfinite(float(self.statistic)):
            raise DataError(f"{self.test}: statistic must be finite")
        if self.n < 0:
            raise DataError(f"{self.test}: n must be non-negative")
        if self.p_value is not None:
            p = float(self.p_value)
            if not (0.0 < p <= 1.0):
                raise DataError(f"{self.test}: p-value {p} outside (0, 1]")
            object.__setattr__(self, "p_value", p)
        if self.r_squared is not None:
            r2 = float(self.r_squared)
            if not (-1e-12 <= r2 <= 1.0 + 1e-12):
                raise DataError(f"{self.test}: R^2 {r2} outside [0, 1]")
            object.__setattr__(self, "r_squared", min(max(r2, 0.0), 1.0))
        object.__setattr__(self, "statistic", float(self.statistic))
        object.__setattr__(self, "group", dict(self.group))

    def to_record(self) -> dict:
        return {
            "kind": "stat",
            "test": self.test,
            "statistic": self.statistic,
            "n": int(self.n),
            "p_value": self.p_value,
            "r_squared": self.r_squared,
            "mean_delta": self.mean_delta,
            "group": dict(self.group),
            "note": self.note,
        }
