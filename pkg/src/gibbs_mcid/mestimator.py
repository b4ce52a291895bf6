"""Empirical-risk minimization over the candidate thresholds, plus the
percentile bootstrap interval for the resulting point estimator.

The empirical risk only changes value at sample x values, so minimizing over
the candidate set (distinct order statistics plus one sentinel below the
sample) is an exact global search over the observed range.  Ties are broken
deterministically: leftmost minimizing interval, midpoint, clipped to the
observed x-range; an interval that extends to -infinity is represented
as such and contributes the left edge of the data range as the point value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._util import derive_seed
from .errors import ValidationError
from .scenarios import Dataset


@dataclass(frozen=True)
class EstimateResult:
    theta_hat: float
    risk_at_min: float
    argmin_intervals: tuple

    def __post_init__(self):
        if not any(lo < self.theta_hat <= hi for lo, hi in self.argmin_intervals):
            raise ValidationError("EstimateResult: theta_hat outside argmin intervals")


def _sorted_arrays(data: Dataset):
    order = np.argsort(data.x, kind="stable")
    return data.x[order], data.y[order]


def candidate_set(data: Dataset) -> np.ndarray:
    """Distinct sorted x values, preceded by one sentinel point below the sample.

    The gap below the minimum is IQR/n (1/n when the IQR vanishes); only the
    risk value attained there matters, not the gap itself.
    """
    xs = np.unique(data.x)
    iqr = float(np.percentile(data.x, 75) - np.percentile(data.x, 25))
    g = (iqr if iqr > 0 else 1.0) / data.n
    return np.concatenate([[xs[0] - g], xs])


def m_estimate(data: Dataset) -> EstimateResult:
    """Exact minimizer of the empirical risk over the candidate set."""
    xs, ys = _sorted_arrays(data)
    n = data.n
    M = _kernels.misclass_counts(ys)[:n]
    valid = np.ones(n, bool)
    valid[1:] = xs[1:] > xs[:-1]
    Mv = np.where(valid, M, n + 1)
    best = int(Mv.min())

    intervals = []
    i = 0
    while i < n:
        if valid[i] and M[i] == best:
            j = i
            while j + 1 < n and (not valid[j + 1] or M[j + 1] == best):
                j += 1
            lo = -np.inf if i == 0 else float(xs[i - 1])
            intervals.append((lo, float(xs[j])))
            i = j + 1
        else:
            i += 1

    lo0, hi0 = intervals[0]
    theta = float(xs[0]) if lo0 == -np.inf else 0.5 * (lo0 + hi0)
    theta = float(min(max(theta, xs[0]), xs[-1]))

    kern_theta, kern_best = _kernels.argmin_theta(xs, ys)
    assert kern_best == best and kern_theta == theta, "kernel/m_estimate mismatch"

    return EstimateResult(theta, best / n, tuple(intervals))


def bootstrap_ci(data: Dataset, B: int, alpha: float, seed: int) -> tuple[float, float]:
    """Percentile bootstrap interval for theta_hat from B case resamples."""
    if B < 1:
        raise ValidationError("bootstrap_ci: B must be >= 1")
    if not 0 < alpha < 1:
        raise ValidationError("bootstrap_ci: alpha must lie in (0, 1)")
    rng = np.random.default_rng(derive_seed(seed, "bootstrap"))
    idx = rng.integers(0, data.n, size=(B, data.n))
    thetas = _kernels.bootstrap_thetas(data.x, data.y, idx)
    lo, hi = np.quantile(thetas, [alpha / 2, 1 - alpha / 2])
    return float(lo), float(hi)


def bootstrap_thetas(data: Dataset, B: int, seed: int) -> np.ndarray:
    """The bootstrap replicate estimates themselves (used by diagnostics)."""
    rng = np.random.default_rng(derive_seed(seed, "bootstrap"))
    idx = rng.integers(0, data.n, size=(B, data.n))
    return _kernels.bootstrap_thetas(data.x, data.y, idx)
