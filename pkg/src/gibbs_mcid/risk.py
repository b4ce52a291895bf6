"""Misclassification loss, empirical risk, and population risk.

The loss is the 0-1 mismatch between y and the sign of x - theta, with
sign(0) = +1.  The empirical risk is its sample mean: a step function of
theta, right-constant on the half-open intervals between consecutive
distinct sample x values.  The population risk is evaluated by adaptive
quadrature over the marginal, either directly or through the difference
representation R(theta) - R(theta*) = 2 * integral of (eta - 1/2) * pdf
between theta* and theta; the two routes cross-check each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate as _integrate

from ._util import atomic_write_text, fmt
from .errors import InvariantViolationError, NumericalError, ValidationError
from .scenarios import Dataset, Scenario, true_mcid

_QUAD_TOL = 1e-8
_TAIL_MASS = 1e-10


def loss(theta: float, x: float, y: int) -> int:
    """0-1 loss: 1 iff y disagrees with sign(x - theta), where sign(0) = +1."""
    if y != 1 and y != -1:
        raise ValidationError("loss: y must be exactly -1 or +1")
    if not (np.isfinite(theta) and np.isfinite(x)):
        raise ValidationError("loss: theta and x must be finite")
    s = 1 if x >= theta else -1
    return 0 if s == y else 1


def empirical_risk(theta: float, data: Dataset) -> float:
    """Fraction of samples misclassified by the threshold rule at theta."""
    pred = np.where(data.x >= theta, 1, -1)
    return float(np.count_nonzero(pred != data.y)) / data.n


def smoothed_empirical_risk(theta: float, tau: float, data: Dataset, form: str = "ramp") -> float:
    """Margin-ramp surrogate of the empirical risk.

    form="ramp" (default): mean of min{1, [1 - y (x - theta) / tau]+}, which
    converges pointwise to the 0-1 risk as tau -> 0 away from sample points.
    form="literal" keeps the sign-based display variant
    min{1, [1 - y sign(x - theta) / tau]+} for comparison.
    """
    if tau <= 0:
        raise ValidationError("smoothed_empirical_risk: tau must be > 0")
    if form == "ramp":
        margin = data.y * (data.x - theta) / tau
        vals = np.minimum(1.0, np.maximum(1.0 - margin, 0.0))
    elif form == "literal":
        s = np.where(data.x >= theta, 1.0, -1.0)
        vals = np.minimum(1.0, np.maximum(1.0 - data.y * s / tau, 0.0))
    else:
        raise ValidationError(f"smoothed_empirical_risk: unknown form {form!r}")
    return float(vals.mean())


def _quad_piecewise(f, a, b, breakpoints):
    """Adaptive quadrature of f on [a, b], split at interior breakpoints."""
    if b <= a:
        return 0.0
    pts = sorted({a, b, *(p for p in breakpoints if a < p < b)})
    total = 0.0
    err = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        val, abserr = _integrate.quad(f, lo, hi, epsabs=_QUAD_TOL / 10, epsrel=1e-10, limit=200)
        total += val
        err += abserr
    if err > _QUAD_TOL:
        raise NumericalError(
            f"quadrature did not reach tolerance {_QUAD_TOL:g} on [{a:g}, {b:g}]: "
            f"estimated error {err:g}"
        )
    return total


def population_risk(scenario: Scenario, theta: float) -> float:
    """P{Y != sign(X - theta)} by adaptive quadrature (abs tolerance 1e-8)."""
    lo, hi = scenario.marginal.bounds(_TAIL_MASS)
    breaks = scenario.eta_breakpoints()

    def below(x):
        return float(scenario.eta_array(np.array([x]))[0] * scenario.marginal.pdf(x))

    def above(x):
        return float((1.0 - scenario.eta_array(np.array([x]))[0]) * scenario.marginal.pdf(x))

    tc = min(max(theta, lo), hi)
    return _quad_piecewise(below, lo, tc, breaks) + _quad_piecewise(above, tc, hi, breaks)


def population_risk_difference(scenario: Scenario, theta: float, theta_star: float | None = None) -> float:
    """R(theta) - R(theta*) via 2 * integral of (eta - 1/2) * pdf over [theta*, theta]."""
    ts = true_mcid(scenario) if theta_star is None else theta_star

    def g(x):
        return float(
            2.0 * (scenario.eta_array(np.array([x]))[0] - 0.5) * scenario.marginal.pdf(x)
        )

    breaks = scenario.eta_breakpoints()
    if theta >= ts:
        return _quad_piecewise(g, ts, theta, breaks)
    return -_quad_piecewise(g, theta, ts, breaks)


def risk_gap_exponent_check(scenario: Scenario, deltas=None) -> float:
    """Fitted log-log slope of the local risk gap around theta*.

    The gap at offset delta is min{R(theta*+delta), R(theta*-delta)} - R(theta*)
    (the worse of the two sides governs the lower bound), computed from the
    difference representation and cross-checked against direct population-risk
    differences.  For curves with local smoothness gamma1 the slope is
    1 + gamma1.
    """
    if deltas is None:
        deltas = np.logspace(-3, -1, 8)
    deltas = np.asarray(deltas, dtype=float)
    if len(deltas) < 5:
        raise ValidationError("risk_gap_exponent_check: need at least 5 delta points")
    if np.any((deltas <= 0) | (deltas > 0.2)):
        raise ValidationError("risk_gap_exponent_check: deltas must lie in (0, 0.2]")
    ts = true_mcid(scenario)
    r_star = population_risk(scenario, ts)
    gaps = np.empty(len(deltas))
    for i, d in enumerate(deltas):
        up = population_risk_difference(scenario, ts + d, ts)
        dn = population_risk_difference(scenario, ts - d, ts)
        for side, val in (("+", up), ("-", dn)):
            direct = population_risk(scenario, ts + d if side == "+" else ts - d) - r_star
            if abs(direct - val) > 1e-6:
                raise NumericalError(
                    f"risk representations disagree at theta*{side}{d:g}: "
                    f"direct {direct:.3e} vs difference form {val:.3e}"
                )
        gap = min(up, dn)
        if gap <= 0:
            raise InvariantViolationError(
                f"non-positive risk gap {gap:.3e} at delta={d:g}; "
                "theta* should be the unique risk minimizer"
            )
        gaps[i] = gap
    slope, _ = np.polyfit(np.log(deltas), np.log(gaps), 1)
    return float(slope)


@dataclass(frozen=True)
class RiskCurve:
    """Risk evaluated on an increasing theta grid, exportable as CSV."""

    thetas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.thetas, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or v.shape != t.shape:
            raise ValidationError("RiskCurve: thetas and values must match in shape")
        if not np.all(np.diff(t) > 0):
            raise ValidationError("RiskCurve: thetas must be strictly increasing")
        if np.any((v < 0) | (v > 1)):
            raise ValidationError("RiskCurve: risk values must lie in [0, 1]")
        object.__setattr__(self, "thetas", t)
        object.__setattr__(self, "values", v)

    def to_csv(self, path: str, header: str = "") -> None:
        lines = [header] if header else []
        lines.append("theta,risk")
        lines.extend(f"{fmt(t)},{fmt(v)}" for t, v in zip(self.thetas, self.values))
        atomic_write_text(path, "\n".join(lines) + "\n")


def empirical_risk_curve(data: Dataset, thetas) -> RiskCurve:
    thetas = np.asarray(thetas, dtype=float)
    return RiskCurve(thetas, np.array([empirical_risk(t, data) for t in thetas]))


def population_risk_curve(scenario: Scenario, thetas) -> RiskCurve:
    thetas = np.asarray(thetas, dtype=float)
    return RiskCurve(thetas, np.array([population_risk(scenario, t) for t in thetas]))
