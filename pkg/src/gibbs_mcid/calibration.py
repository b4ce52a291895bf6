"""Data-driven choice of the loss scale omega by coverage matching.

The scale controls posterior spread, so it is tuned until bootstrap-estimated
credible-interval coverage matches the nominal level: resample the data,
build the exact posterior on each resample, and count how often the interval
contains the original-data risk minimizer (the plug-in stand-in for the
unknown truth).  A Robbins-Monro recursion on log(omega) with decaying gain
drives the estimated coverage to the target; updates in log space keep omega
positive, and coverage above target always pushes omega up (narrower
intervals), below target down.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._util import atomic_write_text, derive_seed, fmt
from .errors import ValidationError
from .gibbs import Prior, FlatPrior, _prior_code
from .mestimator import m_estimate
from .scenarios import Dataset

DEFAULT_BOOTSTRAP = 200
DEFAULT_DRAWS = 4_000
_GAIN_POWER = 0.51


@dataclass(frozen=True)
class CalibrationResult:
    omega: float
    trace: tuple
    target: float
    converged: bool

    def __post_init__(self):
        if self.omega <= 0:
            raise ValidationError("CalibrationResult: omega must be > 0")
        if not self.trace:
            raise ValidationError("CalibrationResult: trace must be nonempty")

    def omega_ratio(self, n: int) -> float:
        """omega relative to n^(-2/5), the scale the recursion is seeded with."""
        return self.omega / n ** (-0.4)

    def trace_to_csv(self, path: str, header: str = "") -> None:
        lines = [header] if header else []
        lines.append("iter,omega,coverage")
        lines.extend(f"{t},{fmt(w)},{fmt(c)}" for t, w, c in self.trace)
        atomic_write_text(path, "\n".join(lines) + "\n")


def estimate_coverage(
    data: Dataset,
    omega: float,
    prior: Prior,
    level: float,
    B: int = DEFAULT_BOOTSTRAP,
    m: int = DEFAULT_DRAWS,
    seed: int = 0,
) -> float:
    """Bootstrap estimate of credible-interval coverage at the given scale.

    For each of B with-replacement resamples, draw m exact-posterior samples,
    form the equal-tailed interval at `level`, and record whether it contains
    the original-data point estimate.
    """
    if B < 1:
        raise ValidationError("estimate_coverage: B must be >= 1")
    if not 0 < level < 1:
        raise ValidationError("estimate_coverage: level must lie in (0, 1)")
    if omega < 0:
        raise ValidationError("estimate_coverage: omega must be >= 0")
    theta_ref = m_estimate(data).theta_hat
    rng = np.random.default_rng(derive_seed(seed, "coverage"))
    idx = rng.integers(0, data.n, size=(B, data.n))
    u_seg = rng.random((B, m))
    u_pos = rng.random((B, m))
    code, pa, pb = _prior_code(prior)
    covered = _kernels.coverage_count(
        data.x, data.y, float(omega), code, pa, pb, idx, u_seg, u_pos, float(level), theta_ref
    )
    return covered / B


def calibrate_omega(
    data: Dataset,
    level: float = 0.90,
    prior: Prior = FlatPrior(),
    max_iter: int = 25,
    tol: float = 0.02,
    seed: int = 0,
    B: int = DEFAULT_BOOTSTRAP,
    m: int = DEFAULT_DRAWS,
) -> CalibrationResult:
    """Robbins-Monro coverage matching on log(omega).

    Starts at omega = n^(-2/5); iterates log-omega += gain_t * (coverage -
    level) with gain_t = t^(-0.51); declares convergence after two
    consecutive coverage estimates within tol of the target.  Hitting
    max_iter returns converged=False with the trace (not an exception).
    """
    if not 0 < level < 1:
        raise ValidationError("calibrate_omega: level must lie in (0, 1)")
    if max_iter < 1:
        raise ValidationError("calibrate_omega: max_iter must be >= 1")
    if tol <= 0:
        raise ValidationError("calibrate_omega: tol must be > 0")
    log_omega = -0.4 * np.log(data.n)
    trace = []
    prev_ok = False
    for t in range(1, max_iter + 1):
        omega = float(np.exp(log_omega))
        chat = estimate_coverage(
            data, omega, prior, level, B=B, m=m, seed=derive_seed(seed, "calib-iter", t)
        )
        trace.append((t, omega, chat))
        ok = abs(chat - level) <= tol
        if ok and prev_ok:
            return CalibrationResult(omega, tuple(trace), level, True)
        prev_ok = ok
        log_omega += (chat - level) / t ** _GAIN_POWER
    return CalibrationResult(trace[-1][1], tuple(trace), level, False)
