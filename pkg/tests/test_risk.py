import numpy as np
import pytest
from hypothesis import given, strategies as st

import gibbs_mcid as gm
from gibbs_mcid.scenarios import Jump, TableEta, Uniform

from conftest import random_dataset


def test_loss_basic_triples():
    assert gm.loss(0.0, 1.0, 1) == 0
    assert gm.loss(0.0, 1.0, -1) == 1
    # sign(0) = +1: a sample sitting exactly at the threshold is called positive
    assert gm.loss(0.0, 0.0, 1) == 0
    assert gm.loss(0.0, 0.0, -1) == 1


def test_loss_rejects_bad_labels():
    with pytest.raises(gm.ValidationError):
        gm.loss(0.0, 1.0, 0)
    with pytest.raises(gm.ValidationError):
        gm.loss(np.nan, 1.0, 1)


@given(
    theta=st.floats(-50, 50, allow_nan=False),
    x=st.floats(-50, 50, allow_nan=False),
    y=st.sampled_from([-1, 1]),
)
def test_loss_is_binary(theta, x, y):
    assert gm.loss(theta, x, y) in (0, 1)


def test_empirical_risk_examples():
    d = gm.Dataset([1.0, -1.0], [1, -1])
    assert gm.empirical_risk(0.0, d) == 0.0
    assert gm.empirical_risk(2.0, d) == 0.5
    d2 = gm.Dataset([3.0, 4.0, 5.0], [1, 1, 1])
    assert gm.empirical_risk(1.0, d2) == 0.0


def test_empirical_risk_times_n_is_integer():
    rng = np.random.default_rng(0)
    for _ in range(20):
        d = random_dataset(rng)
        for theta in rng.normal(0, 2, 5):
            r = gm.empirical_risk(theta, d)
            k = round(r * d.n)
            assert abs(r * d.n - k) < 1e-9
            assert r == k / d.n  # exactly k/n, same float division


def test_empirical_risk_piecewise_constant_between_order_stats():
    rng = np.random.default_rng(1)
    for _ in range(10):
        d = random_dataset(rng, n=25)
        xs = np.sort(np.unique(d.x))
        for a, b in zip(xs[:-1], xs[1:]):
            t1 = a + 0.25 * (b - a)
            t2 = a + 0.75 * (b - a)
            # (a, b] is one constancy interval; b itself belongs to it
            assert gm.empirical_risk(t1, d) == gm.empirical_risk(t2, d) == gm.empirical_risk(b, d)


def test_argmin_scale_invariance():
    rng = np.random.default_rng(2)
    d = random_dataset(rng, n=40)
    cands = gm.candidate_set(d)
    risks = np.array([gm.empirical_risk(c, d) for c in cands])
    for omega in (1e-3, 1.0, 7.3, 1e4):
        assert np.argmin(omega * risks) == np.argmin(risks)


def test_smoothed_risk_examples():
    assert gm.smoothed_empirical_risk(0.0, 1.0, gm.Dataset([2.0], [1])) == 0.0
    assert gm.smoothed_empirical_risk(0.0, 1.0, gm.Dataset([-2.0], [1])) == 1.0
    assert gm.smoothed_empirical_risk(0.0, 1.0, gm.Dataset([0.5], [1])) == 0.5


def test_smoothed_risk_converges_to_01_risk():
    rng = np.random.default_rng(3)
    d = random_dataset(rng, n=30)
    theta = 0.37  # not a sample point almost surely
    r0 = gm.empirical_risk(theta, d)
    for tau in (1e-3, 1e-6):
        assert gm.smoothed_empirical_risk(theta, tau, d) == pytest.approx(r0, abs=1e-12)


def test_smoothed_risk_literal_form_is_binary_for_small_tau():
    d = gm.Dataset([0.5, -0.5], [1, -1])
    v = gm.smoothed_empirical_risk(0.0, 0.5, d, form="literal")
    assert v in (0.0, 0.5, 1.0)
    with pytest.raises(gm.ValidationError):
        gm.smoothed_empirical_risk(0.0, -1.0, d)
    with pytest.raises(gm.ValidationError):
        gm.smoothed_empirical_risk(0.0, 1.0, d, form="quadratic")


def test_population_risk_jump_zero():
    s = gm.Scenario("hard-jump", Uniform(-1, 1), Jump(0.0, 1.0, 0.0), (-1, 1))
    assert gm.population_risk(s, 0.0) == pytest.approx(0.0, abs=1e-10)


def test_population_risk_example3_monte_carlo_oracle():
    s = gm.builtin_scenario("example3")
    v_star = gm.population_risk(s, 1.0)
    rng = np.random.default_rng(42)
    x = rng.uniform(0, 2, 1_000_000)
    eta = x / 2
    y = np.where(rng.random(len(x)) < eta, 1, -1)
    for theta, v in [(1.0, v_star), (0.0, gm.population_risk(s, 0.0)), (2.0, gm.population_risk(s, 2.0))]:
        mc = np.mean(np.where(x >= theta, 1, -1) != y)
        assert v == pytest.approx(mc, abs=0.003)
    assert gm.population_risk(s, 0.0) > v_star
    assert gm.population_risk(s, 2.0) > v_star


def test_population_risk_deterministic(ex2):
    assert gm.population_risk(ex2, 1.0) == gm.population_risk(ex2, 1.0)


def test_population_risk_at_theta_star_quarter_for_cdf_link():
    # analytic: for eta equal to the marginal CDF, R(theta*) = 1/4 exactly
    for name in ("example1", "example2", "example3", "example4"):
        s = gm.builtin_scenario(name)
        assert gm.population_risk(s, gm.true_mcid(s)) == pytest.approx(0.25, abs=1e-7)


def test_risk_representations_agree_on_grid():
    for name in gm.BUILTIN_NAMES:
        s = gm.builtin_scenario(name)
        ts = gm.true_mcid(s)
        r_star = gm.population_risk(s, ts)
        lo, hi = s.support_hint
        for theta in np.linspace(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo), 7):
            direct = gm.population_risk(s, float(theta)) - r_star
            diff = gm.population_risk_difference(s, float(theta), ts)
            assert abs(direct - diff) < 1e-6, (name, theta)


def test_risk_gap_exponents():
    assert gm.risk_gap_exponent_check(gm.builtin_scenario("cusp")) == pytest.approx(1.5, abs=0.05)
    assert gm.risk_gap_exponent_check(gm.builtin_scenario("example2")) == pytest.approx(2.0, abs=0.05)
    assert gm.risk_gap_exponent_check(gm.builtin_scenario("jump")) == pytest.approx(1.0, abs=0.05)


def test_risk_gap_exponent_validations():
    s = gm.builtin_scenario("cusp")
    with pytest.raises(gm.ValidationError):
        gm.risk_gap_exponent_check(s, deltas=[0.01, 0.02])
    with pytest.raises(gm.ValidationError):
        gm.risk_gap_exponent_check(s, deltas=[0.3, 0.1, 0.05, 0.02, 0.01])


def test_risk_gap_flat_plateau_violates_invariant():
    # eta sits exactly at 1/2 on a plateau right of theta*: zero gap
    s = gm.Scenario(
        "plateau",
        Uniform(-1, 1),
        TableEta((-1.0, 0.0, 0.5, 1.0), (0.4, 0.5, 0.5, 1.0)),
        (-1, 1),
    )
    with pytest.raises(gm.InvariantViolationError):
        gm.risk_gap_exponent_check(s)


def test_empirical_risk_mean_approaches_population(ex2):
    theta = 1.3
    pop = gm.population_risk(ex2, theta)
    vals = np.array(
        [gm.empirical_risk(theta, gm.generate(ex2, 1000, 50_000 + i)) for i in range(200)]
    )
    se = vals.std(ddof=1) / np.sqrt(len(vals))
    assert abs(vals.mean() - pop) < 3 * se + 1e-12


def test_risk_curve_validation_and_csv(tmp_path):
    with pytest.raises(gm.ValidationError):
        gm.RiskCurve(np.array([1.0, 1.0]), np.array([0.1, 0.2]))
    with pytest.raises(gm.ValidationError):
        gm.RiskCurve(np.array([0.0, 1.0]), np.array([0.1, 1.2]))
    d = gm.Dataset([0.0, 1.0], [-1, 1])
    curve = gm.empirical_risk_curve(d, [-0.5, 0.5, 1.5])
    path = tmp_path / "curve.csv"
    curve.to_csv(str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "theta,risk"
    assert len(lines) == 4
