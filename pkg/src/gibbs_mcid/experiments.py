"""Monte Carlo harness: repeated-sampling studies, convergence-rate checks,
and the misspecified-likelihood comparison.

Every replication owns a seed derived from (master seed, scenario name, n,
replication index, role), so reports are bit-identical across runs and any
single replication can be reproduced in isolation.  Point estimators and
interval methods are evaluated on the same datasets (paired design).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._util import atomic_write_text, derive_seed, fmt
from .calibration import calibrate_omega
from .errors import GibbsMcidError, MixingError, ValidationError
from .gibbs import (
    FlatPrior,
    NormalPrior,
    Prior,
    exact_posterior,
    sample_exact,
    summarize,
)
from .mestimator import bootstrap_ci, m_estimate
from .scenarios import Dataset, Scenario, builtin_scenario, generate, true_mcid

ALL_METHODS = ("m-estimator", "posterior-mean", "bootstrap-ci", "gibbs-ci")
POINT_METHODS = ("m-estimator", "posterior-mean")
INTERVAL_METHODS = ("bootstrap-ci", "gibbs-ci")

DEFAULT_OMEGA_POLICY = "fixed-scale:3.4"


def resolve_omega_policy(policy: str):
    """Parse an omega policy string.

    "calibrate-per-dataset"      -> calibrate on every dataset
    "fixed-scale:<c>"            -> omega = c * n^(-2/5)
    "fixed-omega:<w>" or "<w>"   -> omega = w
    """
    if policy == "calibrate-per-dataset":
        return ("calibrate", None)
    if policy.startswith("fixed-scale:"):
        c = float(policy.split(":", 1)[1])
        if c <= 0:
            raise ValidationError("omega policy: scale constant must be > 0")
        return ("scale", c)
    if policy.startswith("fixed-omega:"):
        w = float(policy.split(":", 1)[1])
        if w <= 0:
            raise ValidationError("omega policy: omega must be > 0")
        return ("omega", w)
    try:
        w = float(policy)
    except ValueError:
        raise ValidationError(
            f"unknown omega policy {policy!r}; use calibrate-per-dataset, "
            "fixed-scale:<c>, fixed-omega:<w>, or a number"
        ) from None
    if w <= 0:
        raise ValidationError("omega policy: omega must be > 0")
    return ("omega", w)


def _omega_for(policy_kind, policy_val, data: Dataset, n: int, level, prior, seed):
    if policy_kind == "scale":
        return policy_val * n ** (-0.4)
    if policy_kind == "omega":
        return policy_val
    return calibrate_omega(data, level=level, prior=prior, seed=seed).omega


@dataclass(frozen=True)
class MethodRow:
    method: str
    abs_bias: float | None = None
    sd: float | None = None
    coverage: float | None = None
    mean_length: float | None = None
    coverage_se: float | None = None
    length_sd: float | None = None


@dataclass(frozen=True)
class ExperimentReport:
    scenario: str
    n: int
    replications: int
    level: float
    omega_policy: str
    master_seed: int
    theta_star: float
    mean_omega: float | None
    rows: tuple

    def row(self, method: str) -> MethodRow:
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def _header(self) -> str:
        cfg = {
            "scenario": self.scenario,
            "n": self.n,
            "replications": self.replications,
            "level": self.level,
            "omega_policy": self.omega_policy,
            "seed": self.master_seed,
            "theta_star": self.theta_star,
            "mean_omega": self.mean_omega,
        }
        return "# gibbs-mcid study\n# config: " + json.dumps(cfg, sort_keys=True)

    def to_estimates_csv(self, path: str, header: str | None = None) -> None:
        lines = [header if header is not None else self._header()]
        lines.append("scenario,n,method,abs_bias,sd")
        for r in self.rows:
            if r.abs_bias is not None:
                lines.append(
                    f"{self.scenario},{self.n},{r.method},{fmt(r.abs_bias)},{fmt(r.sd)}"
                )
        atomic_write_text(path, "\n".join(lines) + "\n")

    def to_intervals_csv(self, path: str, header: str | None = None) -> None:
        lines = [header if header is not None else self._header()]
        lines.append("scenario,n,method,coverage,mean_length,coverage_se")
        for r in self.rows:
            if r.coverage is not None:
                lines.append(
                    f"{self.scenario},{self.n},{r.method},{fmt(r.coverage)},"
                    f"{fmt(r.mean_length)},{fmt(r.coverage_se)}"
                )
        atomic_write_text(path, "\n".join(lines) + "\n")


def run_study(
    scenario: Scenario,
    n: int,
    reps: int,
    methods=ALL_METHODS,
    omega_policy: str = DEFAULT_OMEGA_POLICY,
    level: float = 0.90,
    seed: int = 0,
    bootstrap_B: int = 1_000,
    gibbs_draws: int = 10_000,
) -> ExperimentReport:
    """Bias/SD of the point estimators and coverage/length of the intervals.

    Absolute empirical bias is |mean signed error|; coverage is the fraction
    of replications whose interval contains theta*.
    """
    if reps < 1:
        raise ValidationError("run_study: reps must be >= 1")
    unknown = set(methods) - set(ALL_METHODS)
    if unknown:
        raise ValidationError(f"run_study: unknown methods {sorted(unknown)}")
    kind, val = resolve_omega_policy(omega_policy)
    need_gibbs = "posterior-mean" in methods or "gibbs-ci" in methods
    theta_star = true_mcid(scenario)
    prior = FlatPrior()

    est = {m: np.empty(reps) for m in methods if m in POINT_METHODS}
    cov = {m: np.empty(reps, dtype=bool) for m in methods if m in INTERVAL_METHODS}
    length = {m: np.empty(reps) for m in methods if m in INTERVAL_METHODS}
    omegas = np.empty(reps) if need_gibbs else None

    for i in range(reps):
        rep_seed = derive_seed(seed, scenario.name, n, i, "data")
        try:
            data = generate(scenario, n, rep_seed)
            if "m-estimator" in methods:
                est["m-estimator"][i] = m_estimate(data).theta_hat
            if "bootstrap-ci" in methods:
                lo, hi = bootstrap_ci(
                    data, bootstrap_B, 1 - level, derive_seed(seed, scenario.name, n, i, "boot")
                )
                cov["bootstrap-ci"][i] = lo <= theta_star <= hi
                length["bootstrap-ci"][i] = hi - lo
            if need_gibbs:
                omega = _omega_for(
                    kind, val, data, n, level, prior,
                    derive_seed(seed, scenario.name, n, i, "calib"),
                )
                omegas[i] = omega
                post = exact_posterior(data, omega, prior)
                draws = sample_exact(
                    post, gibbs_draws, derive_seed(seed, scenario.name, n, i, "draws")
                )
                s = summarize(draws, level)
                if "posterior-mean" in methods:
                    est["posterior-mean"][i] = s.mean
                if "gibbs-ci" in methods:
                    cov["gibbs-ci"][i] = s.ci_lo <= theta_star <= s.ci_hi
                    length["gibbs-ci"][i] = s.ci_hi - s.ci_lo
        except GibbsMcidError as exc:
            raise type(exc)(
                f"replication {i} of {scenario.name} n={n} (derived seed {rep_seed}): {exc}"
            ) from exc

    rows = []
    for mth in methods:
        if mth in POINT_METHODS:
            err = est[mth] - theta_star
            rows.append(
                MethodRow(
                    mth,
                    abs_bias=float(abs(err.mean())),
                    sd=float(err.std(ddof=1)) if reps > 1 else 0.0,
                )
            )
        else:
            p = float(cov[mth].mean())
            rows.append(
                MethodRow(
                    mth,
                    coverage=p,
                    mean_length=float(length[mth].mean()),
                    coverage_se=float(np.sqrt(p * (1 - p) / reps)),
                    length_sd=float(length[mth].std(ddof=1)) if reps > 1 else 0.0,
                )
            )
    return ExperimentReport(
        scenario.name,
        n,
        reps,
        level,
        omega_policy,
        seed,
        theta_star,
        float(omegas.mean()) if need_gibbs else None,
        tuple(rows),
    )


@dataclass(frozen=True)
class RateReport:
    scenario: str
    n_grid: tuple
    rmse: tuple
    r_hat: float
    r_theory: float | None
    estimator: str
    master_seed: int

    def to_csv(self, path: str, header: str | None = None) -> None:
        cfg = {
            "scenario": self.scenario,
            "estimator": self.estimator,
            "seed": self.master_seed,
        }
        lines = [
            header if header is not None else
            "# gibbs-mcid rate-check\n# config: " + json.dumps(cfg, sort_keys=True)
        ]
        lines.append("scenario,n,rmse")
        for n, r in zip(self.n_grid, self.rmse):
            lines.append(f"{self.scenario},{n},{fmt(r)}")
        summary = {"r_hat": self.r_hat, "r_theory": self.r_theory}
        lines.append("# summary: " + json.dumps(summary, sort_keys=True))
        atomic_write_text(path, "\n".join(lines) + "\n")


def run_rate_check(
    scenario: Scenario,
    n_grid,
    reps: int,
    estimator: str = "m-estimator",
    seed: int = 0,
    omega_policy: str = DEFAULT_OMEGA_POLICY,
    gibbs_draws: int = 4_000,
) -> RateReport:
    """RMSE of the chosen estimator across n, with the fitted decay exponent.

    r_hat is minus the least-squares slope of log RMSE against log n; the
    theoretical exponent is 1 / (1 + 2 * gamma1) when the scenario's local
    smoothness is known.
    """
    n_grid = [int(v) for v in n_grid]
    if len(n_grid) < 3:
        raise ValidationError("run_rate_check: need at least 3 sample sizes")
    if max(n_grid) < 16 * min(n_grid):
        raise ValidationError("run_rate_check: n_grid must span at least a factor of 16")
    if estimator not in POINT_METHODS:
        raise ValidationError(f"run_rate_check: estimator must be one of {POINT_METHODS}")
    kind, val = resolve_omega_policy(omega_policy)
    theta_star = true_mcid(scenario)
    prior = FlatPrior()
    rmse = []
    for n in n_grid:
        se = 0.0
        for i in range(reps):
            data = generate(scenario, n, derive_seed(seed, scenario.name, n, i, "data"))
            if estimator == "m-estimator":
                th = m_estimate(data).theta_hat
            else:
                omega = _omega_for(
                    kind, val, data, n, 0.90, prior,
                    derive_seed(seed, scenario.name, n, i, "calib"),
                )
                post = exact_posterior(data, omega, prior)
                th = sample_exact(
                    post, gibbs_draws, derive_seed(seed, scenario.name, n, i, "draws")
                ).draws.mean()
            se += (th - theta_star) ** 2
        rmse.append(float(np.sqrt(se / reps)))
    slope, _ = np.polyfit(np.log(n_grid), np.log(rmse), 1)
    g1 = scenario.gamma1
    return RateReport(
        scenario.name,
        tuple(n_grid),
        tuple(rmse),
        float(-slope),
        None if g1 is None else 1.0 / (1.0 + 2.0 * g1),
        estimator,
        seed,
    )


# ---------------------------------------------------------------------------
# misspecified-likelihood comparison
# ---------------------------------------------------------------------------


_LOGISTIC_PRIOR_SD = 10.0


def _logistic_log_post(beta, x, y):
    lin = beta[0] + beta[1] * x
    ll = -np.logaddexp(0.0, -y * lin).sum()
    return ll - (beta[0] ** 2 + beta[1] ** 2) / (2 * _LOGISTIC_PRIOR_SD**2)


def _logistic_map(x, y):
    """Newton iterations for the posterior mode of the linear-logit model."""
    beta = np.zeros(2)
    X = np.column_stack([np.ones_like(x), x])
    t = (y + 1) / 2
    lam = 1.0 / _LOGISTIC_PRIOR_SD**2
    for _ in range(60):
        p = 1.0 / (1.0 + np.exp(-(X @ beta)))
        grad = X.T @ (t - p) - lam * beta
        w = np.maximum(p * (1 - p), 1e-12)
        H = (X * w[:, None]).T @ X + lam * np.eye(2)
        step = np.linalg.solve(H, grad)
        beta = beta + step
        if np.max(np.abs(step)) < 1e-10:
            break
    p = 1.0 / (1.0 + np.exp(-(X @ beta)))
    w = np.maximum(p * (1 - p), 1e-12)
    H = (X * w[:, None]).T @ X + lam * np.eye(2)
    return beta, np.linalg.inv(H)


@dataclass(frozen=True)
class LogisticComparison:
    logistic_theta: np.ndarray
    gibbs_theta: np.ndarray
    theta_star: float
    logistic_beta: np.ndarray
    logistic_acceptance: float
    omega: float

    def to_csv(self, path: str, header: str = "") -> None:
        m = min(len(self.logistic_theta), len(self.gibbs_theta))
        lines = [header] if header else []
        lines.append("logistic_theta,gibbs_theta")
        lines.extend(
            f"{fmt(a)},{fmt(b)}"
            for a, b in zip(self.logistic_theta[:m], self.gibbs_theta[:m])
        )
        atomic_write_text(path, "\n".join(lines) + "\n")


def run_logistic_comparison(
    scenario,
    n: int,
    seed: int = 0,
    draws: int = 10_000,
    burn_in: int = 2_000,
    level: float = 0.90,
) -> LogisticComparison:
    """Bayesian linear-logit posterior for the half-response dose -b0/b1 next to
    the loss-based posterior, on one simulated dataset.

    The logit model uses independent normal(0, 10^2) priors on intercept and
    slope, sampled by random-walk Metropolis started at the posterior mode
    with pilot-adapted proposal scales; the loss-based posterior uses a
    calibrated scale and the exact sampler.
    """
    if isinstance(scenario, str):
        scenario = builtin_scenario(scenario)
    if n < 50:
        raise ValidationError("run_logistic_comparison: n must be >= 50")
    theta_star = true_mcid(scenario)
    data = generate(scenario, n, derive_seed(seed, scenario.name, n, "data"))
    x, y = data.x, data.y.astype(float)

    beta, cov = _logistic_map(x, y)
    scales = 2.4 * np.sqrt(np.maximum(np.diag(cov), 1e-12)) / np.sqrt(2.0)
    rng = np.random.default_rng(derive_seed(seed, scenario.name, n, "logit-chain"))

    def block(beta0, scale_mult, T):
        b = beta0.copy()
        lp = _logistic_log_post(b, x, y)
        acc = 0
        kept = np.empty((T, 2))
        zs = rng.standard_normal((T, 2)) * (scales * scale_mult)
        lu = np.log(rng.random(T))
        for t in range(T):
            prop = b + zs[t]
            lpp = _logistic_log_post(prop, x, y)
            if lu[t] < lpp - lp:
                b, lp = prop, lpp
                acc += 1
            kept[t] = b
        return b, kept, acc / T

    mult = 1.0
    for _ in range(30):
        beta, _, rate = block(beta, mult, 200)
        if rate < 0.2:
            mult *= 0.6
        elif rate > 0.5:
            mult *= 1.6
        else:
            break
    beta, _, _ = block(beta, mult, burn_in)
    beta, kept, rate = block(beta, mult, draws)
    if not 0.05 <= rate <= 0.8:
        raise MixingError(
            f"logistic chain acceptance {rate:.3f} outside [0.05, 0.8] after adaptation"
        )
    logistic_theta = -kept[:, 0] / kept[:, 1]

    calib = calibrate_omega(
        data, level=level, seed=derive_seed(seed, scenario.name, n, "calib")
    )
    post = exact_posterior(data, calib.omega, FlatPrior())
    gd = sample_exact(post, draws, derive_seed(seed, scenario.name, n, "draws"))
    return LogisticComparison(
        logistic_theta, gd.draws, theta_star, kept, rate, calib.omega
    )


# ---------------------------------------------------------------------------
# informative-prior demonstration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PriorComparisonReport:
    scenario: str
    n: int
    replications: int
    level: float
    omega_policy: str
    master_seed: int
    informative: MethodRow
    flat: MethodRow

    def to_csv(self, path: str, header: str | None = None) -> None:
        cfg = {
            "scenario": self.scenario,
            "n": self.n,
            "replications": self.replications,
            "level": self.level,
            "omega_policy": self.omega_policy,
            "seed": self.master_seed,
        }
        lines = [
            header if header is not None else
            "# gibbs-mcid informative-prior\n# config: " + json.dumps(cfg, sort_keys=True)
        ]
        lines.append("prior,abs_bias,sd,coverage,mean_length")
        for name, r in (("normal(-0.5,1)", self.informative), ("flat", self.flat)):
            lines.append(
                f"{name},{fmt(r.abs_bias)},{fmt(r.sd)},{fmt(r.coverage)},{fmt(r.mean_length)}"
            )
        atomic_write_text(path, "\n".join(lines) + "\n")


def informative_prior_demo(
    seed: int = 0,
    reps: int = 500,
    n: int = 250,
    level: float = 0.90,
    omega_policy: str = DEFAULT_OMEGA_POLICY,
    gibbs_draws: int = 10_000,
) -> PriorComparisonReport:
    """Accurate normal(-0.5, 1) prior vs flat prior on the bimodal scenario,
    paired over the same datasets."""
    scenario = builtin_scenario("example1")
    theta_star = true_mcid(scenario)
    kind, val = resolve_omega_policy(omega_policy)
    priors = {"informative": NormalPrior(-0.5, 1.0), "flat": FlatPrior()}
    est = {k: np.empty(reps) for k in priors}
    cov = {k: np.empty(reps, dtype=bool) for k in priors}
    length = {k: np.empty(reps) for k in priors}
    for i in range(reps):
        data = generate(scenario, n, derive_seed(seed, scenario.name, n, i, "data"))
        for k, prior in priors.items():
            omega = _omega_for(
                kind, val, data, n, level, prior,
                derive_seed(seed, scenario.name, n, i, "calib", k),
            )
            post = exact_posterior(data, omega, prior)
            draws = sample_exact(
                post, gibbs_draws, derive_seed(seed, scenario.name, n, i, "draws", k)
            )
            s = summarize(draws, level)
            est[k][i] = s.mean
            cov[k][i] = s.ci_lo <= theta_star <= s.ci_hi
            length[k][i] = s.ci_hi - s.ci_lo

    def row(k):
        err = est[k] - theta_star
        p = float(cov[k].mean())
        return MethodRow(
            k,
            abs_bias=float(abs(err.mean())),
            sd=float(err.std(ddof=1)),
            coverage=p,
            mean_length=float(length[k].mean()),
            coverage_se=float(np.sqrt(p * (1 - p) / reps)),
        )

    return PriorComparisonReport(
        scenario.name, n, reps, level, omega_policy, seed, row("informative"), row("flat")
    )
