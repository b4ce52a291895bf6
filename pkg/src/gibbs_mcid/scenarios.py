"""Synthetic data-generating scenarios and their true thresholds.

A Scenario bundles a marginal law for the diagnostic measure X, a
conditional-probability curve eta(x) = P(Y=+1 | X=x), and a bracket known
to contain the true threshold theta* (the smallest x with eta(x) >= 1/2).
Scenarios are frozen dataclasses: immutable, hashable, safely shared across
threads; `generate` takes its randomness as an explicit seed.

Built-in scenarios (addressable by name, see BUILTIN_NAMES):

  example1     X ~ 0.7 N(-1,1) + 0.3 N(1,1), eta = marginal CDF
  example2     X ~ N(1,1), eta = marginal CDF
  example3     X ~ Unif(0,2), eta = marginal CDF
  example4     X ~ Gamma(shape 2, scale 1/2), eta = marginal CDF
  cusp         X ~ Unif(-1,1), eta continuous with a cusp at 0
  jump         X ~ Unif(-1,1), eta steps from 0.2 to 0.8 at 0
  logit-demo-a X ~ 0.7 N(-1,1) + 0.3 N(1,1), eta = marginal CDF
  logit-demo-b X ~ 0.7 N(-1,1) + 0.3 N(5,1), eta = marginal CDF

example3/example4 parameters are the ones that reproduce the reference
simulation results; the resolved parameters are embedded in every output
header so runs are self-describing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special as _sp

from .errors import DomainError, NoRootError, ValidationError

_BISECT_TOL = 1e-10


# ---------------------------------------------------------------------------
# marginal distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Normal:
    mu: float
    sigma: float
    kind: str = field(default="normal", init=False, repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.mu) and np.isfinite(self.sigma)):
            raise ValidationError("marginal.params: mu and sigma must be finite")
        if self.sigma <= 0:
            raise ValidationError("marginal.params.sigma: must be > 0")

    def sample(self, rng, n):
        return rng.normal(self.mu, self.sigma, n)

    def cdf(self, x):
        return _sp.ndtr((np.asarray(x, dtype=float) - self.mu) / self.sigma)

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * np.sqrt(2 * np.pi))

    def bounds(self, eps):
        z = -_sp.ndtri(eps / 2)
        return self.mu - z * self.sigma, self.mu + z * self.sigma

    def params(self):
        return {"mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class Uniform:
    a: float
    b: float
    kind: str = field(default="uniform", init=False, repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ValidationError("marginal.params: a and b must be finite")
        if not self.a < self.b:
            raise ValidationError("marginal.params.a: must satisfy a < b")

    def sample(self, rng, n):
        return rng.uniform(self.a, self.b, n)

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.a) & (x <= self.b), 1.0 / (self.b - self.a), 0.0)

    def bounds(self, eps):
        return self.a, self.b

    def params(self):
        return {"a": self.a, "b": self.b}


@dataclass(frozen=True)
class Gamma:
    """Gamma law parameterized by shape and rate (scale = 1/rate)."""

    shape: float
    rate: float
    kind: str = field(default="gamma", init=False, repr=False)

    def __post_init__(self):
        if self.shape <= 0:
            raise ValidationError("marginal.params.shape: must be > 0")
        if self.rate <= 0:
            raise ValidationError("marginal.params.rate: must be > 0")

    def sample(self, rng, n):
        return rng.gamma(self.shape, 1.0 / self.rate, n)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, _sp.gammainc(self.shape, self.rate * np.maximum(x, 0.0)), 0.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 1e-300)
        lg = (
            self.shape * np.log(self.rate)
            + (self.shape - 1) * np.log(xp)
            - self.rate * xp
            - _sp.gammaln(self.shape)
        )
        return np.where(x > 0, np.exp(lg), 0.0)

    def bounds(self, eps):
        return 0.0, float(_sp.gammaincinv(self.shape, 1 - eps / 2) / self.rate)

    def params(self):
        return {"shape": self.shape, "rate": self.rate}


@dataclass(frozen=True)
class NormalMixture:
    """Two-component normal mixture: w N(mu1, sigma1) + (1-w) N(mu2, sigma2)."""

    w: float
    mu1: float
    sigma1: float
    mu2: float
    sigma2: float
    kind: str = field(default="mixture", init=False, repr=False)

    def __post_init__(self):
        if not 0 < self.w < 1:
            raise ValidationError("marginal.params.w: must lie in (0, 1)")
        if self.sigma1 <= 0:
            raise ValidationError("marginal.params.sigma1: must be > 0")
        if self.sigma2 <= 0:
            raise ValidationError("marginal.params.sigma2: must be > 0")

    def sample(self, rng, n):
        comp = rng.random(n) < self.w
        z = rng.normal(0.0, 1.0, n)
        return np.where(comp, self.mu1 + self.sigma1 * z, self.mu2 + self.sigma2 * z)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return self.w * _sp.ndtr((x - self.mu1) / self.sigma1) + (1 - self.w) * _sp.ndtr(
            (x - self.mu2) / self.sigma2
        )

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        z1 = (x - self.mu1) / self.sigma1
        z2 = (x - self.mu2) / self.sigma2
        c = 1.0 / np.sqrt(2 * np.pi)
        return self.w * c / self.sigma1 * np.exp(-0.5 * z1 * z1) + (
            1 - self.w
        ) * c / self.sigma2 * np.exp(-0.5 * z2 * z2)

    def bounds(self, eps):
        z = -_sp.ndtri(eps / 4)
        lo = min(self.mu1 - z * self.sigma1, self.mu2 - z * self.sigma2)
        hi = max(self.mu1 + z * self.sigma1, self.mu2 + z * self.sigma2)
        return lo, hi

    def params(self):
        return {
            "w": self.w,
            "mu1": self.mu1,
            "sigma1": self.sigma1,
            "mu2": self.mu2,
            "sigma2": self.sigma2,
        }


Marginal = Normal | Uniform | Gamma | NormalMixture


# ---------------------------------------------------------------------------
# conditional-probability (eta) specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CdfLink:
    """eta(x) equals the marginal CDF of X (labels drawn at the quantile level)."""

    kind: str = field(default="cdf-link", init=False, repr=False)

    def params(self):
        return {}


@dataclass(frozen=True)
class Cusp:
    """Continuous eta with a cusp at 0 on [-1, 1].

    eta(x) = (1 - |x|^alpha1)/2 on [-1, 0) and (1 + x^alpha2)/2 on [0, 1].
    Local smoothness exponents: alpha1 on the flat side, alpha2 on the steep
    side (alpha1 >= alpha2 required).
    """

    alpha1: float
    alpha2: float
    kind: str = field(default="cusp", init=False, repr=False)

    def __post_init__(self):
        if not 0 < self.alpha1 < 1:
            raise ValidationError("eta.params.alpha1: must lie in (0, 1)")
        if not 0 < self.alpha2 < 1:
            raise ValidationError("eta.params.alpha2: must lie in (0, 1)")
        if self.alpha1 < self.alpha2:
            raise ValidationError("eta.params.alpha1: must be >= alpha2")

    def params(self):
        return {"alpha1": self.alpha1, "alpha2": self.alpha2}


@dataclass(frozen=True)
class Jump:
    """eta steps from lo to hi at theta0 (discontinuous crossing)."""

    lo: float
    hi: float
    theta0: float
    kind: str = field(default="jump", init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.lo < 0.5:
            raise ValidationError("eta.params.lo: must lie in [0, 1/2)")
        if not 0.5 < self.hi <= 1:
            raise ValidationError("eta.params.hi: must lie in (1/2, 1]")
        if not np.isfinite(self.theta0):
            raise ValidationError("eta.params.theta0: must be finite")

    def params(self):
        return {"lo": self.lo, "hi": self.hi, "theta0": self.theta0}


@dataclass(frozen=True)
class TableEta:
    """Piecewise-linear eta through (x, eta) knots, clamped outside the knots."""

    xs: tuple
    etas: tuple
    kind: str = field(default="table", init=False, repr=False)

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        es = np.asarray(self.etas, dtype=float)
        if len(xs) != len(es) or len(xs) < 2:
            raise ValidationError("eta.params.xs: need >= 2 knots matching etas")
        if not np.all(np.diff(xs) > 0):
            raise ValidationError("eta.params.xs: must be strictly increasing")
        if np.any((es < 0) | (es > 1)):
            raise ValidationError("eta.params.etas: values must lie in [0, 1]")

    def params(self):
        return {"xs": list(self.xs), "etas": list(self.etas)}


Eta = CdfLink | Cusp | Jump | TableEta


# ---------------------------------------------------------------------------
# Scenario and Dataset
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """A named data-generating model with a solvable true threshold."""

    name: str
    marginal: Marginal
    eta: Eta
    support_hint: tuple

    def __post_init__(self):
        lo, hi = self.support_hint
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValidationError("support_hint: must be a finite interval lo < hi")
        object.__setattr__(self, "support_hint", (float(lo), float(hi)))
        if isinstance(self.eta, Cusp):
            mlo, mhi = self.marginal.bounds(1e-12)
            if mlo < -1 or mhi > 1:
                raise ValidationError(
                    "eta.kind=cusp: marginal support must lie within [-1, 1]"
                )

    def eta_array(self, x):
        """Vectorized eta over an array (domain-checked for the cusp curve)."""
        x = np.asarray(x, dtype=float)
        e = self.eta
        if isinstance(e, CdfLink):
            return self.marginal.cdf(x)
        if isinstance(e, Cusp):
            if np.any((x < -1) | (x > 1)):
                raise DomainError("eta.kind=cusp: x outside [-1, 1]")
            neg = x < 0
            return np.where(
                neg,
                0.5 * (1 - np.abs(x) ** e.alpha1),
                0.5 * (1 + np.maximum(x, 0.0) ** e.alpha2),
            )
        if isinstance(e, Jump):
            return np.where(x < e.theta0, e.lo, e.hi)
        return np.interp(x, np.asarray(e.xs, float), np.asarray(e.etas, float))

    def eta_breakpoints(self):
        """Points where eta is non-smooth (quadrature split points)."""
        e = self.eta
        if isinstance(e, Cusp):
            return [-1.0, 0.0, 1.0]
        if isinstance(e, Jump):
            return [e.theta0]
        if isinstance(e, TableEta):
            return [float(v) for v in e.xs]
        return []

    @property
    def gamma1(self):
        """Local smoothness exponent of eta at theta* (None if unknown)."""
        if isinstance(self.eta, Jump):
            return 0.0
        if isinstance(self.eta, Cusp):
            return self.alpha_pair()[0]
        if isinstance(self.eta, CdfLink):
            return 1.0
        return None

    def alpha_pair(self):
        return (self.eta.alpha1, self.eta.alpha2)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "marginal.kind": self.marginal.kind,
            "marginal.params": self.marginal.params(),
            "eta.kind": self.eta.kind,
            "eta.params": self.eta.params(),
            "support_hint": list(self.support_hint),
        }


class Dataset:
    """Labeled sample: paired arrays x (float) and y (each exactly -1 or +1)."""

    __slots__ = ("x", "y")

    def __init__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y)
        if x.ndim != 1 or y.shape != x.shape:
            raise ValidationError("dataset: x and y must be 1-d arrays of equal length")
        if len(x) < 1:
            raise ValidationError("dataset: need at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValidationError("dataset: every x must be finite")
        if not np.all((y == 1) | (y == -1)):
            raise ValidationError("dataset: every y must be exactly -1 or +1")
        self.x = x
        self.y = y.astype(np.int64)

    @property
    def n(self) -> int:
        return len(self.x)

    def samples(self):
        return list(zip(self.x.tolist(), self.y.tolist()))

    def __eq__(self, other):
        return (
            isinstance(other, Dataset)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
        )

    def __repr__(self):
        return f"Dataset(n={self.n})"


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def generate(scenario: Scenario, n: int, seed: int) -> Dataset:
    """Draw n i.i.d. pairs: X from the marginal, then Y=+1 with probability eta(X).

    Deterministic: identical (scenario, n, seed) yields a bit-identical Dataset.
    """
    if n < 1:
        raise ValidationError("generate: n must be >= 1")
    rng = np.random.default_rng(seed)
    x = scenario.marginal.sample(rng, n)
    p = scenario.eta_array(x)
    y = np.where(rng.random(n) < p, 1, -1)
    return Dataset(x, y)


def eta_value(scenario: Scenario, x: float) -> float:
    """eta(x) as a scalar in [0, 1]."""
    if not np.isfinite(x):
        raise ValidationError("eta_value: x must be finite")
    return float(scenario.eta_array(np.array([x]))[0])


def true_mcid(scenario: Scenario) -> float:
    """The threshold theta* = inf{x : eta(x) >= 1/2}.

    Jump curves return theta0 exactly; everything else is solved by bisection
    on the support hint to absolute tolerance 1e-10.  Requires eta to be
    non-decreasing across the hint with eta(lo) < 1/2 <= eta(hi).
    """
    if isinstance(scenario.eta, Jump):
        return float(scenario.eta.theta0)
    lo, hi = scenario.support_hint
    flo = eta_value(scenario, lo)
    fhi = eta_value(scenario, hi)
    if not (flo < 0.5 <= fhi):
        raise NoRootError(
            f"eta does not bracket 1/2 on support_hint {scenario.support_hint}: "
            f"eta(lo)={flo:.6g}, eta(hi)={fhi:.6g}"
        )
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if eta_value(scenario, mid) >= 0.5:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# built-ins
# ---------------------------------------------------------------------------


def _mix_a():
    return NormalMixture(0.7, -1.0, 1.0, 1.0, 1.0)


_BUILTINS = {
    "example1": lambda: Scenario("example1", _mix_a(), CdfLink(), (-4.0, 3.0)),
    "example2": lambda: Scenario("example2", Normal(1.0, 1.0), CdfLink(), (-4.0, 6.0)),
    "example3": lambda: Scenario("example3", Uniform(0.0, 2.0), CdfLink(), (0.0, 2.0)),
    "example4": lambda: Scenario("example4", Gamma(2.0, 2.0), CdfLink(), (1e-09, 20.0)),
    "cusp": lambda: Scenario("cusp", Uniform(-1.0, 1.0), Cusp(0.5, 0.5), (-1.0, 1.0)),
    "jump": lambda: Scenario("jump", Uniform(-1.0, 1.0), Jump(0.2, 0.8, 0.0), (-1.0, 1.0)),
    "logit-demo-a": lambda: Scenario("logit-demo-a", _mix_a(), CdfLink(), (-4.0, 3.0)),
    "logit-demo-b": lambda: Scenario(
        "logit-demo-b", NormalMixture(0.7, -1.0, 1.0, 5.0, 1.0), CdfLink(), (-4.0, 7.0)
    ),
}

BUILTIN_NAMES = tuple(sorted(_BUILTINS))


def builtin_scenario(name: str) -> Scenario:
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise ValidationError(
            f"unknown scenario {name!r}; built-ins: {', '.join(BUILTIN_NAMES)}"
        ) from None
