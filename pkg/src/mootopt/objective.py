"""Chebyshev scoring of labeled rows and the best/rest partition.

Every goal value is normalized to [0,1] against the full-file range, then
scored as the maximum gap to the per-goal ideal (0 for minimize goals,
1 for maximize goals). Smaller is better; the metric punishes a row if any
single goal is bad. Labeled rows sorted ascending split into a small
"best" set of size round(sqrt(N)) and a larger "rest" set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .data import Dataset, MAXIMIZE, Row


def ideal_point(ds: Dataset) -> list[float]:
    """Per-goal target in normalized space: 1 for maximize, 0 for minimize."""
    return [1.0 if c.direction == MAXIMIZE else 0.0 for c in ds.y_cols]


def chebyshev(row: Row, ds: Dataset) -> float:
    """Max normalized gap between a labeled row's goals and the ideal point."""
    if not row.labeled:
        raise ValueError(f"row {row.id} is unlabeled; its goal values are hidden")
    worst = 0.0
    for i, col in enumerate(ds.y_cols):
        v = row.y[i]
        if v is None:
            gap = 1.0  # missing goal counts as maximally bad
        else:
            target = 1.0 if col.direction == MAXIMIZE else 0.0
            gap = abs(ds.norm(col, float(v)) - target)
        worst = max(worst, gap)
    return worst


@dataclass
class BestRestSplit:
    best: list[Row]  # ascending chebyshev
    rest: list[Row]

    @property
    def n(self) -> int:
        return len(self.best) + len(self.rest)


def best_size(n: int) -> int:
    """round(sqrt(N)) with a floor of 1."""
    return max(1, int(math.sqrt(n) + 0.5))


def split(labeled: list[Row], ds: Dataset) -> BestRestSplit:
    """Partition labeled rows into best (first round(sqrt(N))) and rest.

    Ties at the boundary break by ascending row id, so repeated calls on
    the same rows agree exactly.
    """
    if len(labeled) < 2:
        raise ValueError(f"need at least 2 labeled rows to split, got {len(labeled)}")
    ranked = sorted(labeled, key=lambda r: (chebyshev(r, ds), r.id))
    k = best_size(len(ranked))
    return BestRestSplit(best=ranked[:k], rest=ranked[k:])
