"""Command-line front end.

Subcommands: generate, estimate, posterior, calibrate, study, rate-check,
compare-logistic.  Every run is a pure function of (resolved config, seed):
the resolved config is embedded as a `# config:` comment header in each
output file, outputs are written atomically (temp file + rename), and
re-running the same configuration reproduces the bytes exactly.

Exit codes: 0 success, 1 validation/configuration error, 2 numerical or
mixing error.  Errors print one machine-parseable line
(`error: <class>: <reason>`) to stderr before any detail.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import re
import sys
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._util import atomic_write_text, config_header, fmt
from .calibration import calibrate_omega
from .errors import ConfigError, NumericalError, ValidationError
from .gibbs import (
    FlatPrior,
    NormalPrior,
    exact_posterior,
    sample_exact,
    sample_metropolis,
    summarize,
)
from .mestimator import bootstrap_ci, m_estimate
from .experiments import (
    DEFAULT_OMEGA_POLICY,
    run_logistic_comparison,
    run_rate_check,
    run_study,
)
from .scenarios import (
    BUILTIN_NAMES,
    CdfLink,
    Cusp,
    Gamma,
    Jump,
    Normal,
    NormalMixture,
    Scenario,
    TableEta,
    Uniform,
    builtin_scenario,
    generate,
)

DEFAULT_SEED = 20260808
DEFAULT_LEVEL = 0.90
DEFAULT_N = 500
_ENV_THREADS = "GIBBS_MCID_THREADS"


@dataclass(frozen=True)
class RunConfig:
    command: str
    scenario: str
    n: str
    reps: int
    level: float
    omega: str
    prior: str
    seed: int
    out: str
    sampler: str
    draws: int
    threads: int | None

    def as_dict(self) -> dict:
        d = {
            "command": self.command,
            "scenario": self.scenario,
            "n": self.n,
            "reps": self.reps,
            "level": self.level,
            "omega": self.omega,
            "prior": self.prior,
            "seed": self.seed,
            "sampler": self.sampler,
            "draws": self.draws,
        }
        # out/threads affect where and how fast, never what; keeping them out
        # of the provenance payload lets re-runs to another path compare byte-equal
        return d


# ---------------------------------------------------------------------------
# scenario configuration files
# ---------------------------------------------------------------------------

_SECTION_KEYS = {
    "scenario": {"name", "support_hint"},
    "marginal": {"kind"},
    "eta": {"kind"},
}
_MARGINAL_PARAM_KEYS = {
    "normal": {"mu", "sigma"},
    "uniform": {"a", "b"},
    "gamma": {"shape", "rate", "scale"},
    "mixture": {"w", "mu1", "sigma1", "mu2", "sigma2"},
}
_ETA_PARAM_KEYS = {
    "cdf-link": set(),
    "cusp": {"alpha1", "alpha2"},
    "jump": {"lo", "hi", "theta0"},
    "table": {"xs", "etas"},
}


def _find_line(text: str, token: str) -> int | None:
    pat = re.compile(rf"^\s*{re.escape(token)}\s*[=:\[]", re.IGNORECASE)
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.match(line) or line.strip() == f"[{token}]":
            return i
    return None


def _floats(raw: str, key: str, text: str):
    try:
        return [float(v) for v in raw.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"expected numbers, got {raw!r}", key=key, line=_find_line(text, key.split(".")[-1]))


def _float(raw: str, key: str, text: str) -> float:
    vals = _floats(raw, key, text)
    if len(vals) != 1:
        raise ConfigError(f"expected one number, got {raw!r}", key=key, line=_find_line(text, key.split(".")[-1]))
    return vals[0]


def load_scenario_config(path: str) -> Scenario:
    """Parse and validate an INI scenario file (strict schema, unknown keys rejected).

    Sections: [scenario] name, support_hint; [marginal] kind;
    [marginal.params] ...; [eta] kind; [eta.params] ... (see README).
    """
    if not os.path.exists(path):
        raise ConfigError(f"scenario config file not found: {path}")
    with open(path) as f:
        text = f.read()
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=path)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"parse error in {path}: {exc.message}", line=line) from exc

    known_sections = {"scenario", "marginal", "marginal.params", "eta", "eta.params"}
    for sec in cp.sections():
        if sec not in known_sections:
            raise ConfigError(f"unknown section [{sec}]", key=sec, line=_find_line(text, sec))
    for sec, allowed in _SECTION_KEYS.items():
        if not cp.has_section(sec):
            raise ConfigError(f"missing required section [{sec}]", key=sec)
        for key in cp.options(sec):
            if key not in allowed:
                raise ConfigError(
                    f"unknown key {key!r} in [{sec}]",
                    key=f"{sec}.{key}",
                    line=_find_line(text, key),
                )

    name = cp.get("scenario", "name", fallback=None)
    if not name:
        raise ConfigError("missing scenario.name", key="scenario.name")
    hint_raw = cp.get("scenario", "support_hint", fallback=None)
    if not hint_raw:
        raise ConfigError("missing scenario.support_hint", key="scenario.support_hint")
    hint = _floats(hint_raw, "scenario.support_hint", text)
    if len(hint) != 2:
        raise ConfigError(
            "support_hint must be two numbers 'lo, hi'",
            key="scenario.support_hint",
            line=_find_line(text, "support_hint"),
        )

    mkind = cp.get("marginal", "kind", fallback="")
    if mkind not in _MARGINAL_PARAM_KEYS:
        raise ConfigError(
            f"unknown marginal.kind {mkind!r}; one of {sorted(_MARGINAL_PARAM_KEYS)}",
            key="marginal.kind",
            line=_find_line(text, "kind"),
        )
    mpar = dict(cp.items("marginal.params")) if cp.has_section("marginal.params") else {}
    for key in mpar:
        if key not in _MARGINAL_PARAM_KEYS[mkind]:
            raise ConfigError(
                f"unknown key {key!r} in [marginal.params] for kind {mkind!r}",
                key=f"marginal.params.{key}",
                line=_find_line(text, key),
            )

    def mp(key):
        if key not in mpar:
            raise ConfigError(f"missing marginal.params.{key}", key=f"marginal.params.{key}")
        return _float(mpar[key], f"marginal.params.{key}", text)

    if mkind == "normal":
        marginal = Normal(mp("mu"), mp("sigma"))
    elif mkind == "uniform":
        marginal = Uniform(mp("a"), mp("b"))
    elif mkind == "gamma":
        if ("rate" in mpar) == ("scale" in mpar):
            raise ConfigError(
                "gamma needs exactly one of rate or scale",
                key="marginal.params.rate",
                line=_find_line(text, "shape"),
            )
        rate = mp("rate") if "rate" in mpar else 1.0 / mp("scale")
        marginal = Gamma(mp("shape"), rate)
    else:
        marginal = NormalMixture(mp("w"), mp("mu1"), mp("sigma1"), mp("mu2"), mp("sigma2"))

    ekind = cp.get("eta", "kind", fallback="")
    if ekind not in _ETA_PARAM_KEYS:
        raise ConfigError(
            f"unknown eta.kind {ekind!r}; one of {sorted(_ETA_PARAM_KEYS)}",
            key="eta.kind",
            line=_find_line(text, "kind"),
        )
    epar = dict(cp.items("eta.params")) if cp.has_section("eta.params") else {}
    for key in epar:
        if key not in _ETA_PARAM_KEYS[ekind]:
            raise ConfigError(
                f"unknown key {key!r} in [eta.params] for kind {ekind!r}",
                key=f"eta.params.{key}",
                line=_find_line(text, key),
            )

    def ep(key):
        if key not in epar:
            raise ConfigError(f"missing eta.params.{key}", key=f"eta.params.{key}")
        return _float(epar[key], f"eta.params.{key}", text)

    if ekind == "cdf-link":
        eta = CdfLink()
    elif ekind == "cusp":
        eta = Cusp(ep("alpha1"), ep("alpha2"))
    elif ekind == "jump":
        eta = Jump(ep("lo"), ep("hi"), ep("theta0"))
    else:
        if "xs" not in epar or "etas" not in epar:
            raise ConfigError("table eta needs xs and etas", key="eta.params.xs")
        eta = TableEta(
            tuple(_floats(epar["xs"], "eta.params.xs", text)),
            tuple(_floats(epar["etas"], "eta.params.etas", text)),
        )

    return Scenario(name, marginal, eta, (hint[0], hint[1]))


def _resolve_scenario(spec: str) -> Scenario:
    if spec in BUILTIN_NAMES:
        return builtin_scenario(spec)
    if os.path.exists(spec):
        return load_scenario_config(spec)
    raise ValidationError(
        f"unknown scenario {spec!r} (not a built-in, not a file); "
        f"built-ins: {', '.join(BUILTIN_NAMES)}"
    )


def _parse_prior(spec: str):
    if spec == "flat":
        return FlatPrior()
    if spec.startswith("normal:"):
        parts = spec.split(":", 1)[1].split(",")
        if len(parts) != 2:
            raise ValidationError("prior: use normal:mu,sigma")
        return NormalPrior(float(parts[0]), float(parts[1]))
    raise ValidationError(f"unknown prior {spec!r}; use flat or normal:mu,sigma")


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------


def _scenario_block(scenario: Scenario) -> str:
    return "# scenario: " + json.dumps(scenario.describe(), sort_keys=True)


def _header(cfg: RunConfig, scenario: Scenario | None, extra: dict | None = None) -> str:
    h = config_header(cfg.command, cfg.as_dict()).rstrip("\n")
    if scenario is not None:
        h += "\n" + _scenario_block(scenario)
    if extra:
        h += "\n# meta: " + json.dumps(extra, sort_keys=True, default=str)
    return h


def _single_n(cfg: RunConfig) -> int:
    vals = [int(v) for v in cfg.n.split(",")]
    if len(vals) != 1:
        raise ValidationError(f"--n expects a single integer here, got {cfg.n!r}")
    return vals[0]


def _cmd_generate(cfg: RunConfig) -> list[str]:
    scenario = _resolve_scenario(cfg.scenario)
    n = _single_n(cfg)
    data = generate(scenario, n, cfg.seed)
    lines = [_header(cfg, scenario), "x,y"]
    lines.extend(f"{fmt(a)},{b}" for a, b in zip(data.x, data.y))
    atomic_write_text(cfg.out, "\n".join(lines) + "\n")
    return [cfg.out]


def _cmd_estimate(cfg: RunConfig) -> list[str]:
    scenario = _resolve_scenario(cfg.scenario)
    n = _single_n(cfg)
    data = generate(scenario, n, cfg.seed)
    res = m_estimate(data)
    B = cfg.reps
    lo, hi = bootstrap_ci(data, B, 1 - cfg.level, cfg.seed)
    lines = [
        _header(cfg, scenario, {"bootstrap_B": B}),
        "method,estimate,risk_at_min,lo,hi,level",
        f"m-estimator,{fmt(res.theta_hat)},{fmt(res.risk_at_min)},"
        f"{fmt(lo)},{fmt(hi)},{fmt(cfg.level)}",
    ]
    atomic_write_text(cfg.out, "\n".join(lines) + "\n")
    return [cfg.out]


def _resolve_omega(cfg: RunConfig, data, prior) -> tuple[float, dict]:
    if cfg.omega == "auto":
        calib = calibrate_omega(data, level=cfg.level, prior=prior, seed=cfg.seed)
        meta = {
            "omega": calib.omega,
            "omega_ratio_to_n^-0.4": calib.omega_ratio(data.n),
            "calibration_converged": calib.converged,
            "calibration_iterations": len(calib.trace),
        }
        return calib.omega, meta
    w = float(cfg.omega)
    if w <= 0:
        raise ValidationError("--omega must be positive")
    return w, {"omega": w, "omega_ratio_to_n^-0.4": w / data.n ** (-0.4)}


def _cmd_posterior(cfg: RunConfig) -> list[str]:
    scenario = _resolve_scenario(cfg.scenario)
    n = _single_n(cfg)
    data = generate(scenario, n, cfg.seed)
    prior = _parse_prior(cfg.prior)
    omega, meta = _resolve_omega(cfg, data, prior)
    if cfg.sampler == "exact":
        draws = sample_exact(exact_posterior(data, omega, prior), cfg.draws, cfg.seed)
    else:
        draws = sample_metropolis(data, omega, prior, m=cfg.draws, seed=cfg.seed)
        meta["acceptance_rate"] = draws.diagnostics["acceptance_rate"]
    s = summarize(draws, cfg.level)
    lines = [
        _header(cfg, scenario, meta),
        "method,mean,lo,hi,level,omega",
        s.csv_row(f"gibbs-{cfg.sampler}", omega),
    ]
    atomic_write_text(cfg.out, "\n".join(lines) + "\n")
    return [cfg.out]


def _cmd_calibrate(cfg: RunConfig) -> list[str]:
    scenario = _resolve_scenario(cfg.scenario)
    n = _single_n(cfg)
    data = generate(scenario, n, cfg.seed)
    prior = _parse_prior(cfg.prior)
    calib = calibrate_omega(data, level=cfg.level, prior=prior, seed=cfg.seed)
    meta = {
        "omega": calib.omega,
        "omega_ratio_to_n^-0.4": calib.omega_ratio(n),
        "converged": calib.converged,
    }
    calib.trace_to_csv(cfg.out, header=_header(cfg, scenario, meta))
    return [cfg.out]


def _study_paths(out: str) -> tuple[str, str]:
    stem = out[:-4] if out.endswith(".csv") else out
    return stem + ".estimates.csv", stem + ".intervals.csv"


def _cmd_study(cfg: RunConfig) -> list[str]:
    scenario = _resolve_scenario(cfg.scenario)
    n = _single_n(cfg)
    policy = "calibrate-per-dataset" if cfg.omega == "auto" else (
        DEFAULT_OMEGA_POLICY if cfg.omega == "default" else f"fixed-omega:{float(cfg.omega)}"
    )
    report = run_study(
        scenario,
        n,
        cfg.reps,
        omega_policy=policy,
        level=cfg.level,
        seed=cfg.seed,
        gibbs_draws=cfg.draws,
    )
    meta = {"omega_policy": policy, "mean_omega": report.mean_omega, "theta_star": report.theta_star}
    est_path, int_path = _study_paths(cfg.out)
    header = _header(cfg, scenario, meta)
    report.to_estimates_csv(est_path, header=header)
    report.to_intervals_csv(int_path, header=header)
    return [est_path, int_path]


def _cmd_rate_check(cfg: RunConfig) -> list[str]:
    scenario = _resolve_scenario(cfg.scenario)
    n_grid = [int(v) for v in cfg.n.split(",")]
    report = run_rate_check(scenario, n_grid, cfg.reps, seed=cfg.seed)
    meta = {"r_hat": report.r_hat, "r_theory": report.r_theory, "estimator": report.estimator}
    report.to_csv(cfg.out, header=_header(cfg, scenario, meta))
    return [cfg.out]


def _cmd_compare_logistic(cfg: RunConfig) -> list[str]:
    scenario = _resolve_scenario(cfg.scenario)
    n = _single_n(cfg)
    comp = run_logistic_comparison(scenario, n, seed=cfg.seed, draws=cfg.draws, level=cfg.level)
    meta = {
        "theta_star": comp.theta_star,
        "omega": comp.omega,
        "logistic_acceptance": comp.logistic_acceptance,
        "logistic_prior": "independent normal(0, 10^2) on intercept and slope",
    }
    comp.to_csv(cfg.out, header=_header(cfg, scenario, meta))
    return [cfg.out]


_COMMANDS = {
    "generate": _cmd_generate,
    "estimate": _cmd_estimate,
    "posterior": _cmd_posterior,
    "calibrate": _cmd_calibrate,
    "study": _cmd_study,
    "rate-check": _cmd_rate_check,
    "compare-logistic": _cmd_compare_logistic,
}

_REPS_DEFAULT = {"estimate": 1000, "study": 500, "rate-check": 300}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gibbs-mcid",
        description="Loss-based posterior inference for the minimum clinically "
        "important difference (threshold) of a diagnostic measure.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--scenario", required=True, help="built-in name or config file path")
        default_n = "250,1000,4000,16000" if name == "rate-check" else str(DEFAULT_N)
        sp.add_argument("--n", default=default_n, help="sample size (comma list for rate-check)")
        sp.add_argument("--reps", type=int, default=_REPS_DEFAULT.get(name, 500))
        sp.add_argument("--level", type=float, default=DEFAULT_LEVEL)
        sp.add_argument("--omega", default="default", help="auto | positive float")
        sp.add_argument("--prior", default="flat", help="flat | normal:mu,sigma")
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--out", default=f"gibbs-mcid-{name}.csv")
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--sampler", choices=["exact", "metropolis"], default="exact")
        sp.add_argument("--draws", type=int, default=10_000)
    return p


def _make_config(args) -> RunConfig:
    omega = args.omega
    if args.command == "posterior" and omega == "default":
        omega = "auto"
    return RunConfig(
        command=args.command,
        scenario=args.scenario,
        n=str(args.n),
        reps=args.reps,
        level=args.level,
        omega=omega,
        prior=args.prior,
        seed=args.seed,
        out=args.out,
        sampler=args.sampler,
        draws=args.draws,
        threads=args.threads,
    )


def argv_from_config(config: dict) -> list[str]:
    """Reconstruct an argv that reproduces a run from its emitted config header."""
    argv = [config["command"]]
    for key in ("scenario", "n", "reps", "level", "omega", "prior", "seed", "sampler", "draws"):
        if key in config:
            argv.extend([f"--{key}", str(config[key])])
    return argv


_PRIOR_COMMANDS = {"posterior", "calibrate"}
_SAMPLER_COMMANDS = {"posterior"}


def _reject_ignored_flags(cfg: RunConfig) -> None:
    # silently ignoring a flag is how simulation studies get misconfigured
    if cfg.prior != "flat" and cfg.command not in _PRIOR_COMMANDS:
        raise ValidationError(
            f"--prior is not used by {cfg.command!r}; the prior-comparison "
            "harness lives in the library API (informative_prior_demo)"
        )
    if cfg.sampler != "exact" and cfg.command not in _SAMPLER_COMMANDS:
        raise ValidationError(f"--sampler is not used by {cfg.command!r}")


def run(argv) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _make_config(args)
        _reject_ignored_flags(cfg)
        threads = cfg.threads
        if threads is None and os.environ.get(_ENV_THREADS):
            try:
                threads = int(os.environ[_ENV_THREADS])
            except ValueError:
                raise ValidationError(f"{_ENV_THREADS} must be an integer")
        if threads is not None:
            if threads < 1:
                raise ValidationError("--threads must be >= 1")
            _kernels.set_threads(threads)
        if not 0 < cfg.level < 1:
            raise ValidationError("--level must lie in (0, 1)")
        written = _COMMANDS[cfg.command](cfg)
        for path in written:
            print(path)
        return 0
    except ValidationError as exc:
        print(f"error: validation: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: validation: cannot write output: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))
