"""Loss-driven posterior for the threshold: priors, kernel, two samplers.

The belief distribution is proportional to exp(-omega * n * R_n(theta))
times the prior density, restricted to the observed x-range (data carry no
information about thresholds outside it).  Because R_n is a step function
of theta, the posterior is an exact mixture over the segments between
consecutive distinct sample values: segment j has mass proportional to
exp(-omega * n * r_j) * Prior(segment j), and within a segment the density
is the prior's.  `exact_posterior` builds that representation with
log-sum-exp normalization; `sample_exact` draws i.i.d. from it by inverse
CDF.  `sample_metropolis` is an independent random-walk sampler over the
same kernel; agreement between the two samplers is the correctness anchor
for both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._util import atomic_write_text, derive_seed, fmt
from .errors import MixingError, NumericalError, ValidationError
from .mestimator import m_estimate
from .scenarios import Dataset


@dataclass(frozen=True)
class FlatPrior:
    """Uniform over the observed x-range (proper; range resolved per dataset)."""

    kind: str = field(default="flat-on-range", init=False, repr=False)

    def describe(self):
        return "flat"


@dataclass(frozen=True)
class NormalPrior:
    mu: float
    sigma: float
    kind: str = field(default="normal", init=False, repr=False)

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValidationError("prior.sigma: must be > 0")

    def describe(self):
        return f"normal:{fmt(self.mu)},{fmt(self.sigma)}"


Prior = FlatPrior | NormalPrior


def _prior_code(prior: Prior):
    if isinstance(prior, FlatPrior):
        return 0, 0.0, 1.0
    return 1, float(prior.mu), float(prior.sigma)


@dataclass(frozen=True)
class PosteriorDraws:
    draws: np.ndarray
    omega: float
    sampler: str
    diagnostics: dict

    @property
    def n_draws(self) -> int:
        return len(self.draws)

    def to_csv(self, path: str, header: str = "") -> None:
        lines = [header] if header else []
        lines.append("theta")
        lines.extend(fmt(v) for v in self.draws)
        atomic_write_text(path, "\n".join(lines) + "\n")


@dataclass(frozen=True)
class PosteriorSummary:
    mean: float
    ci_lo: float
    ci_hi: float
    level: float

    def __post_init__(self):
        if not self.ci_lo <= self.ci_hi:
            raise ValidationError("PosteriorSummary: ci_lo must be <= ci_hi")

    def csv_row(self, method: str, omega: float) -> str:
        return ",".join(
            [method, fmt(self.mean), fmt(self.ci_lo), fmt(self.ci_hi), fmt(self.level), fmt(omega)]
        )


@dataclass(frozen=True)
class PiecewisePosterior:
    """Normalized piecewise representation of the exact posterior."""

    edges: np.ndarray
    log_weights: np.ndarray
    omega: float
    prior: Prior
    n: int

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def support(self) -> tuple[float, float]:
        return float(self.edges[0]), float(self.edges[-1])

    def interval_mass(self, lo: float, hi: float) -> float:
        """Posterior mass of [lo, hi] (flat prior only; used by diagnostics)."""
        if not isinstance(self.prior, FlatPrior):
            raise ValidationError("interval_mass implemented for the flat prior")
        a = self.edges[:-1]
        b = self.edges[1:]
        overlap = np.maximum(0.0, np.minimum(b, hi) - np.maximum(a, lo))
        return float(np.sum(self.weights * overlap / (b - a)))

    def mean(self) -> float:
        """Exact posterior mean (flat prior: segment midpoints weighted)."""
        if isinstance(self.prior, FlatPrior):
            mids = 0.5 * (self.edges[:-1] + self.edges[1:])
            return float(np.sum(self.weights * mids))
        raise ValidationError("closed-form mean implemented for the flat prior")


def log_kernel(theta: float, data: Dataset, omega: float, prior: Prior) -> float:
    """Log of the unnormalized posterior density at theta.

    -inf outside the observed x-range (support restriction applied here so
    every sampler inherits it).
    """
    if omega < 0:
        raise ValidationError("log_kernel: omega must be >= 0")
    xs = np.sort(data.x)
    if theta < xs[0] or theta > xs[-1]:
        return -math.inf
    order = np.argsort(data.x, kind="stable")
    M = _kernels.misclass_counts(data.y[order])
    b = int(np.searchsorted(xs, theta, side="left"))
    val = -omega * float(M[b])
    code, pa, pb = _prior_code(prior)
    if code == 0:
        rng_len = float(xs[-1] - xs[0])
        val -= math.log(rng_len) if rng_len > 0 else 0.0
    else:
        z = (theta - pa) / pb
        val += -0.5 * z * z - math.log(pb * math.sqrt(2 * math.pi))
    return val


def exact_posterior(data: Dataset, omega: float, prior: Prior) -> PiecewisePosterior:
    """Exact segment representation of the posterior over the data range."""
    if omega < 0:
        raise ValidationError("exact_posterior: omega must be >= 0")
    order = np.argsort(data.x, kind="stable")
    xs = data.x[order]
    ys = data.y[order]
    edges, counts = _kernels.posterior_segments(xs, ys)
    if len(edges) < 2:
        raise ValidationError("exact_posterior: need at least 2 distinct x values")
    code, pa, pb = _prior_code(prior)
    logw = _kernels.segment_log_weights(edges, counts, omega * 1.0, code, pa, pb)
    if not np.isfinite(np.max(logw)):
        raise NumericalError(
            "posterior mass underflow despite log-sum-exp; reduce omega * n"
        )
    return PiecewisePosterior(np.asarray(edges), np.asarray(logw), float(omega), prior, data.n)


def sample_exact(posterior: PiecewisePosterior, m: int, seed: int) -> PosteriorDraws:
    """m i.i.d. draws by inverse-CDF sampling of the piecewise representation."""
    if m < 1:
        raise ValidationError("sample_exact: m must be >= 1")
    rng = np.random.default_rng(derive_seed(seed, "exact-sampler"))
    u_seg = rng.random(m)
    u_pos = rng.random(m)
    code, pa, pb = _prior_code(posterior.prior)
    cumw = np.cumsum(posterior.weights)
    draws = _kernels.piecewise_sample(posterior.edges, cumw, code, pa, pb, u_seg, u_pos)
    return PosteriorDraws(
        np.asarray(draws), posterior.omega, "exact", {"effective_draws": m}
    )


def _effective_draws(draws: np.ndarray) -> int:
    """Autocorrelation-based effective sample size (initial-positive truncation)."""
    m = len(draws)
    d = draws - draws.mean()
    var = float(np.dot(d, d)) / m
    if var == 0:
        return m
    s = 0.0
    for lag in range(1, min(m // 3, 1000)):
        rho = float(np.dot(d[:-lag], d[lag:])) / ((m - lag) * var)
        if rho <= 0:
            break
        s += rho
    return max(1, int(m / (1 + 2 * s)))


_PILOT_BLOCK = 150
_PILOT_MAX_ROUNDS = 60


def sample_metropolis(
    data: Dataset,
    omega: float,
    prior: Prior,
    m: int = 10_000,
    burn_in: int = 2_000,
    step="auto",
    seed: int = 0,
) -> PosteriorDraws:
    """Random-walk Metropolis over the log kernel, started at the risk minimizer.

    step="auto" adapts a Gaussian proposal scale in pilot blocks until the
    block acceptance rate falls in [0.2, 0.5], then freezes it before burn-in;
    the retained draws use the frozen step.  Deterministic in seed.
    """
    if m < 1:
        raise ValidationError("sample_metropolis: m must be >= 1")
    if burn_in < 0:
        raise ValidationError("sample_metropolis: burn_in must be >= 0")
    order = np.argsort(data.x, kind="stable")
    xs = data.x[order]
    ys = data.y[order]
    if xs[0] == xs[-1]:
        raise ValidationError("sample_metropolis: need at least 2 distinct x values")
    M = _kernels.misclass_counts(ys)
    code, pa, pb = _prior_code(prior)
    rng = np.random.default_rng(derive_seed(seed, "metropolis"))
    theta = m_estimate(data).theta_hat

    if step == "auto":
        scale = (xs[-1] - xs[0]) / 10.0
        for _ in range(_PILOT_MAX_ROUNDS):
            z = rng.standard_normal(_PILOT_BLOCK)
            u = rng.random(_PILOT_BLOCK)
            chain, acc = _kernels.metropolis_chain(
                xs, M, float(omega), code, pa, pb, theta, scale, z, u
            )
            theta = float(chain[-1])
            rate = acc / _PILOT_BLOCK
            if rate < 0.2:
                scale *= 0.5
            elif rate > 0.5:
                scale *= 2.0
            else:
                break
        step = scale
    step = float(step)
    if step <= 0:
        raise ValidationError("sample_metropolis: step must be > 0")

    if burn_in:
        z = rng.standard_normal(burn_in)
        u = rng.random(burn_in)
        chain, _ = _kernels.metropolis_chain(
            xs, M, float(omega), code, pa, pb, theta, step, z, u
        )
        theta = float(chain[-1])

    z = rng.standard_normal(m)
    u = rng.random(m)
    chain, acc = _kernels.metropolis_chain(
        xs, M, float(omega), code, pa, pb, theta, step, z, u
    )
    if acc == 0:
        raise MixingError(
            f"no accepted proposals over {m} retained iterations "
            f"(step={step:g}, omega={omega:g}, n={data.n}); the chain is stuck"
        )
    draws = np.asarray(chain)
    return PosteriorDraws(
        draws,
        float(omega),
        "metropolis",
        {
            "acceptance_rate": acc / m,
            "effective_draws": _effective_draws(draws),
            "step": step,
        },
    )


def summarize(draws: PosteriorDraws, level: float) -> PosteriorSummary:
    """Mean and equal-tailed credible interval from posterior draws."""
    if not 0 < level < 1:
        raise ValidationError("summarize: level must lie in (0, 1)")
    if draws.n_draws < 100:
        raise ValidationError("summarize: need at least 100 draws")
    v = draws.draws
    lo, hi = np.quantile(v, [(1 - level) / 2, (1 + level) / 2])
    return PosteriorSummary(float(v.mean()), float(lo), float(hi), level)


def summaries_to_csv(rows: list[str], path: str, header: str = "") -> None:
    lines = [header] if header else []
    lines.append("method,mean,lo,hi,level,omega")
    lines.extend(rows)
    atomic_write_text(path, "\n".join(lines) + "\n")
