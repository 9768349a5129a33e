"""Analysis helpers: pattern similarity, rank correlation, utility and
seed-sweep summaries."""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy import stats


def similarity(a, b) -> float:
    """Fraction of cells on which two binary grids agree."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("empty grids")
    return float(np.count_nonzero(a.astype(bool) == b.astype(bool)) / a.size)


def spearman_rank(x, y) -> float:
    """Spearman correlation with average ranks for ties."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D and of equal length")
    if len(x) < 3:
        raise ValueError("need at least 3 observations")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("correlation undefined for a constant input")
    rx = stats.rankdata(x)
    ry = stats.rankdata(y)
    return float(np.corrcoef(rx, ry)[0, 1])


def batch_utility(reward_sum, cost_sum) -> float:
    if not cost_sum > 0:
        raise ValueError("cost must be positive")
    return reward_sum / cost_sum


@dataclasses.dataclass
class SweepSummary:
    """Per-seed records plus aggregates of one named metric."""

    records: list
    metric: str

    def values(self):
        return np.array([r[self.metric] for r in self.records], dtype=float)

    @property
    def mean(self):
        return float(np.mean(self.values()))

    @property
    def median(self):
        return float(np.median(self.values()))

    def fraction(self, predicate):
        vals = self.values()
        return float(np.mean([bool(predicate(v)) for v in vals])) if len(vals) else 0.0
