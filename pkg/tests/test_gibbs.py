import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

import gibbs_mcid as gm

from conftest import random_dataset

FLAT = gm.FlatPrior()


def test_log_kernel_piecewise_constant(ex2_data):
    xs = np.sort(np.unique(ex2_data.x))
    a, b = xs[10], xs[11]
    t1, t2 = a + 0.3 * (b - a), a + 0.9 * (b - a)
    assert gm.log_kernel(t1, ex2_data, 0.7, FLAT) == gm.log_kernel(t2, ex2_data, 0.7, FLAT)


def test_log_kernel_difference_scales_with_risk(ex2_data):
    omega, n = 0.7, ex2_data.n
    t1, t2 = 0.5, 2.0
    r1 = gm.empirical_risk(t1, ex2_data)
    r2 = gm.empirical_risk(t2, ex2_data)
    got = gm.log_kernel(t1, ex2_data, omega, FLAT) - gm.log_kernel(t2, ex2_data, omega, FLAT)
    assert got == pytest.approx(-omega * n * (r1 - r2), abs=1e-9)


def test_log_kernel_zero_omega_constant_inside_range(ex2_data):
    vals = {gm.log_kernel(t, ex2_data, 0.0, FLAT) for t in np.linspace(-0.5, 2.5, 7)}
    vals = {v for v in vals if v != -np.inf}
    assert len(vals) == 1
    assert gm.log_kernel(ex2_data.x.max() + 1.0, ex2_data, 0.0, FLAT) == -np.inf
    assert gm.log_kernel(ex2_data.x.min() - 1.0, ex2_data, 0.0, FLAT) == -np.inf


def test_exact_posterior_separable_concentrates():
    d = gm.Dataset([-1.0, 1.0], [-1, 1])
    post = gm.exact_posterior(d, 50.0, FLAT)
    assert post.weights[0] == pytest.approx(1.0, abs=1e-12)
    assert post.interval_mass(-1.0, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_exact_posterior_zero_omega_masses_proportional_to_length():
    d = gm.Dataset([0.0, 1.0, 3.0], [1, -1, 1])
    post = gm.exact_posterior(d, 0.0, FLAT)
    assert np.allclose(post.weights, [1 / 3, 2 / 3])


def test_exact_posterior_matches_naive_oracle(ex2):
    # direct summation with naive exponentials at small omega*n
    d = gm.generate(ex2, 50, 777)
    omega = 0.6
    post = gm.exact_posterior(d, omega, FLAT)
    xs = np.sort(d.x)
    edges = np.unique(xs)
    naive = []
    for a, b in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (a + b)
        naive.append(np.exp(-omega * d.n * gm.empirical_risk(mid, d)) * (b - a))
    naive = np.array(naive) / np.sum(naive)
    assert np.allclose(post.weights, naive, atol=1e-12, rtol=1e-9)


def test_exact_posterior_requires_two_distinct_x():
    with pytest.raises(gm.ValidationError):
        gm.exact_posterior(gm.Dataset([1.0, 1.0], [1, -1]), 0.5, FLAT)


def test_sample_exact_degenerate_interval():
    d = gm.Dataset([-1.0, 1.0], [-1, 1])
    post = gm.exact_posterior(d, 80.0, FLAT)
    draws = gm.sample_exact(post, 500, 3).draws
    assert np.all((draws > -1.0) & (draws <= 1.0))


def test_sample_exact_zero_omega_uniform(ex2_data):
    post = gm.exact_posterior(ex2_data, 0.0, FLAT)
    draws = gm.sample_exact(post, 10_000, 11).draws
    lo, hi = ex2_data.x.min(), ex2_data.x.max()
    assert stats.kstest(draws, "uniform", args=(lo, hi - lo)).pvalue > 1e-3


def test_sample_exact_segment_frequencies_match_weights(ex2_data):
    post = gm.exact_posterior(ex2_data, 0.25, FLAT)
    m = 10_000
    draws = gm.sample_exact(post, m, 12).draws
    seg = np.clip(np.searchsorted(post.edges, draws, side="left") - 1, 0, len(post.weights) - 1)
    freq = np.bincount(seg, minlength=len(post.weights)) / m
    w = post.weights
    big = w > 0.01
    assert np.all(np.abs(freq[big] - w[big]) <= 3 * np.sqrt(w[big] * (1 - w[big]) / m) + 1e-9)


def test_sample_exact_deterministic(ex2_data):
    post = gm.exact_posterior(ex2_data, 0.3, FLAT)
    a = gm.sample_exact(post, 1000, 4).draws
    b = gm.sample_exact(post, 1000, 4).draws
    assert np.array_equal(a, b)


def test_metropolis_zero_omega_uniform(ex2_data):
    res = gm.sample_metropolis(ex2_data, 0.0, FLAT, m=20_000, seed=21)
    thin = res.draws[::10]
    lo, hi = ex2_data.x.min(), ex2_data.x.max()
    # thinned: the i.i.d. KS null is conservative enough for the chain
    assert stats.kstest(thin, "uniform", args=(lo, hi - lo)).pvalue > 1e-3


def test_metropolis_matches_exact_sampler(ex2):
    d = gm.generate(ex2, 500, 606)
    omega = 3.5 * 500 ** (-0.4)
    exact = gm.sample_exact(gm.exact_posterior(d, omega, FLAT), 10_000, 1).draws
    mh = gm.sample_metropolis(d, omega, FLAT, m=10_000, seed=2).draws
    assert stats.ks_2samp(exact, mh).statistic < 0.05


def test_metropolis_matches_exact_sampler_normal_prior(ex2):
    d = gm.generate(ex2, 250, 607)
    prior = gm.NormalPrior(1.0, 2.0)
    omega = 3.5 * 250 ** (-0.4)
    exact = gm.sample_exact(gm.exact_posterior(d, omega, prior), 10_000, 3).draws
    mh = gm.sample_metropolis(d, omega, prior, m=10_000, seed=4).draws
    assert stats.ks_2samp(exact, mh).statistic < 0.05


def test_metropolis_full_acceptance_inside_flat_region():
    d = gm.Dataset([-1.0, 1.0], [-1, 1])
    res = gm.sample_metropolis(d, 5.0, FLAT, m=200, burn_in=0, step=0.01, seed=9)
    assert res.diagnostics["acceptance_rate"] == 1.0


def test_metropolis_reports_diagnostics(ex2_data):
    res = gm.sample_metropolis(ex2_data, 0.4, FLAT, m=2000, seed=5)
    assert 0 < res.diagnostics["acceptance_rate"] <= 1
    assert 1 <= res.diagnostics["effective_draws"] <= 2000
    assert res.sampler == "metropolis"


def test_summarize_uniform_grid():
    draws = gm.PosteriorDraws(np.arange(1, 101) / 100.0, 1.0, "exact", {})
    s = gm.summarize(draws, 0.90)
    assert s.mean == pytest.approx(0.505)
    assert s.ci_lo == pytest.approx(0.055, abs=0.005)
    assert s.ci_hi == pytest.approx(0.955, abs=0.005)


def test_summarize_constant_draws():
    draws = gm.PosteriorDraws(np.full(200, 2.5), 1.0, "exact", {})
    s = gm.summarize(draws, 0.5)
    assert (s.mean, s.ci_lo, s.ci_hi) == (2.5, 2.5, 2.5)


def test_summarize_validations():
    few = gm.PosteriorDraws(np.arange(50.0), 1.0, "exact", {})
    with pytest.raises(gm.ValidationError):
        gm.summarize(few, 0.9)
    ok = gm.PosteriorDraws(np.arange(200.0), 1.0, "exact", {})
    with pytest.raises(gm.ValidationError):
        gm.summarize(ok, 1.5)


def test_argmin_mass_nondecreasing_in_omega(ex2_data):
    res = gm.m_estimate(ex2_data)
    lo = min(iv[0] for iv in res.argmin_intervals)
    lo = ex2_data.x.min() if lo == -np.inf else lo
    masses = []
    for omega in (0.0, 0.05, 0.1, 0.3, 0.6, 1.2, 2.5, 5.0):
        post = gm.exact_posterior(ex2_data, omega, FLAT)
        mass = sum(
            post.interval_mass(ex2_data.x.min() if a == -np.inf else a, b)
            for a, b in res.argmin_intervals
        )
        masses.append(mass)
    assert all(b >= a - 1e-12 for a, b in zip(masses[:-1], masses[1:]))


def test_large_omega_concentrates_on_argmin(ex2_data):
    res = gm.m_estimate(ex2_data)
    cands = gm.candidate_set(ex2_data)
    risks = sorted({gm.empirical_risk(float(c), ex2_data) for c in cands})
    gap = risks[1] - risks[0]
    omega = 60.0 / (gap * ex2_data.n)  # omega * n * gap > 50
    post = gm.exact_posterior(ex2_data, omega, FLAT)
    mass = sum(
        post.interval_mass(ex2_data.x.min() if a == -np.inf else a, b)
        for a, b in res.argmin_intervals
    )
    assert mass > 1 - 1e-6


def test_affine_shift_equivariance(ex2_data):
    c = 2.0
    shifted = gm.Dataset(ex2_data.x + c, ex2_data.y)
    s1 = gm.summarize(gm.sample_exact(gm.exact_posterior(ex2_data, 0.4, FLAT), 5000, 8), 0.9)
    s2 = gm.summarize(gm.sample_exact(gm.exact_posterior(shifted, 0.4, FLAT), 5000, 8), 0.9)
    # exact up to float addition round-off in the shifted edges
    assert s2.mean == pytest.approx(s1.mean + c, abs=1e-9)
    assert s2.ci_lo == pytest.approx(s1.ci_lo + c, abs=1e-9)
    assert s2.ci_hi == pytest.approx(s1.ci_hi + c, abs=1e-9)


def test_sampler_agreement_all_examples():
    for name in ("example1", "example2", "example3", "example4"):
        d = gm.generate(gm.builtin_scenario(name), 250, 4040)
        omega = 3.5 * 250 ** (-0.4)
        exact = gm.sample_exact(gm.exact_posterior(d, omega, FLAT), 10_000, 1).draws
        mh = gm.sample_metropolis(d, omega, FLAT, m=10_000, seed=2).draws
        assert stats.ks_2samp(exact, mh).statistic < 0.05, name


@settings(max_examples=25)
@given(
    seed=st.integers(0, 2**31),
    omega=st.floats(0.0, 5.0, allow_nan=False),
    prior_mu=st.floats(-2, 2),
)
def test_posterior_support_restriction(seed, omega, prior_mu):
    rng = np.random.default_rng(seed)
    d = random_dataset(rng, n=int(rng.integers(3, 30)))
    if len(np.unique(d.x)) < 2:
        return
    for prior in (FLAT, gm.NormalPrior(prior_mu, 1.0)):
        post = gm.exact_posterior(d, omega, prior)
        draws = gm.sample_exact(post, 300, seed).draws
        assert np.all(draws >= d.x.min()) and np.all(draws <= d.x.max())


def test_normal_prior_shifts_posterior(ex2_data):
    left = gm.NormalPrior(-3.0, 0.5)
    right = gm.NormalPrior(3.0, 0.5)
    m_left = gm.sample_exact(gm.exact_posterior(ex2_data, 0.1, left), 4000, 1).draws.mean()
    m_right = gm.sample_exact(gm.exact_posterior(ex2_data, 0.1, right), 4000, 1).draws.mean()
    assert m_left < m_right


def test_draws_csv_round_trip(tmp_path, ex2_data):
    post = gm.exact_posterior(ex2_data, 0.3, FLAT)
    draws = gm.sample_exact(post, 150, 2)
    p = tmp_path / "draws.csv"
    draws.to_csv(str(p))
    vals = np.loadtxt(p, skiprows=1)
    assert np.allclose(vals, draws.draws)


def test_summary_csv_rows(tmp_path, ex2_data):
    from gibbs_mcid.gibbs import summaries_to_csv

    post = gm.exact_posterior(ex2_data, 0.3, FLAT)
    s = gm.summarize(gm.sample_exact(post, 500, 2), 0.9)
    p = tmp_path / "summary.csv"
    summaries_to_csv([s.csv_row("gibbs-exact", 0.3)], str(p))
    lines = p.read_text().splitlines()
    assert lines[0] == "method,mean,lo,hi,level,omega"
    cells = lines[1].split(",")
    assert cells[0] == "gibbs-exact" and float(cells[1]) == pytest.approx(s.mean)
