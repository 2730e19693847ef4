import math
import numpy as np
import pytest
import scipy.stats
from phi4.estimators import (
    TailEstimate, chebyshev_proxy, check_span, clopper_pearson, fit_loglog,
    moment_profile, monotone_within_ci
)


def test_clopper_pearson_reference_values():
    lo, hi = clopper_pearson(0, 10)
    assert lo == 0.0
    assert hi == pytest.approx(0.3085, abs=1e-4)

    lo, hi = clopper_pearson(10, 10)
    assert lo == pytest.approx(0.6915, abs=1e-4)
    assert hi == 1.0

    lo, hi = clopper_pearson(30, 100)
    assert lo < 0.3 < hi
    assert lo == pytest.approx(0.2124, abs=1e-3)
    assert hi == pytest.approx(0.3998, abs=1e-3)


def clopper_pearson_coverage(p: float, n: int) -> float:
    k = np.arange(n + 1)
    covered = [lo <= p <= hi for lo, hi in
               (clopper_pearson(int(i), n) for i in k)]
    return float(np.sum(scipy.stats.binom.pmf(k, n, p)[covered]))


@pytest.mark.parametrize("p, n", [
    (0.01, 200), (0.1, 50), (0.3, 100), (0.5, 40), (0.9, 60),
])
def test_clopper_pearson_coverage_is_conservative(p, n):
    assert clopper_pearson_coverage(p, n) >= 0.95


def test_clopper_pearson_coverage_on_bernoulli_runs():
    p, n, runs = 0.2, 150, 4000
    rng = np.random.Generator(np.random.Philox(12))
    hits = rng.binomial(n, p, size=runs)

    covered = np.mean([lo <= p <= hi for lo, hi in
                       (clopper_pearson(int(h), n) for h in hits)])
    assert covered >= 0.95 - 4 * math.sqrt(0.95 * 0.05 / runs)


def test_clopper_pearson_rejects_bad_counts():
    with pytest.raises(ValueError):
        clopper_pearson(5, 0)
    with pytest.raises(ValueError):
        clopper_pearson(11, 10)


def test_zero_hits_are_censored_with_rule_of_three():
    est = TailEstimate.from_counts(0.1, 0.01, 0, 1000)
    assert est.censored
    assert est.p_hat == 0.0
    assert est.eps_log_p == pytest.approx(0.1 * math.log(3e-3))

    row = est.as_row()
    assert row["censored"] is True
    assert set(row) == {"epsilon", "delta", "hits", "replicas", "p_hat",
                        "ci_low", "ci_high", "eps_log_p", "censored"}


def test_interval_brackets_the_point_estimate():
    for hits in (1, 7, 500, 999, 1000):
        est = TailEstimate.from_counts(0.2, 0.01, hits, 1000)
        assert est.ci_low <= est.p_hat <= est.ci_high
        assert est.eps_log_p == pytest.approx(0.2 * math.log(hits / 1000))


def test_monotone_sweep():
    sweep = [TailEstimate.from_counts(eps, 0.01, hits, 10_000)
             for eps, hits in [(0.4, 3000), (0.2, 800), (0.1, 40), (0.05, 0)]]
    assert monotone_within_ci(sweep)


def test_increase_inside_the_interval_is_allowed():
    a = TailEstimate.from_counts(0.2, 0.01, 100, 1000)
    b = TailEstimate.from_counts(0.2, 0.01, 105, 1000)
    assert b.eps_log_p > a.eps_log_p
    assert a.overlaps(b)
    assert monotone_within_ci([a, b])


def test_clear_increase_breaks_monotonicity():
    a = TailEstimate.from_counts(0.2, 0.01, 10, 10_000)
    b = TailEstimate.from_counts(0.1, 0.01, 9000, 10_000)
    assert not a.overlaps(b)
    assert not monotone_within_ci([a, b])


def test_check_span():
    assert check_span([0.4, 0.2, 0.1, 0.05, 0.0125])
    assert check_span([0.4, 0.2, 0.1, 0.05, 0.025])
    with pytest.raises(ValueError, match="decades"):
        check_span([0.4, 0.2, 0.1, 0.04])
    with pytest.raises(ValueError):
        check_span([0.4, 0.2, 0.1])
    with pytest.raises(ValueError):
        check_span([0.4, 0.3, 0.2, 0.1])


def test_fit_recovers_power_law():
    epsilons = np.array([0.4, 0.2, 0.1, 0.05, 0.025, 0.0125])
    rng = np.random.Generator(np.random.Philox(1))
    samples = [eps ** 0.25 * rng.exponential(size=4000) for eps in epsilons]

    fit = fit_loglog(epsilons, samples)
    assert fit.slope == pytest.approx(0.25, abs=0.05)
    assert 0.0 < fit.stderr < 0.05

    summary = fit.as_dict()
    assert summary["slope"] == fit.slope
    assert len(summary["means"]) == len(epsilons)


def test_fit_ignores_non_finite_replicas():
    epsilons = [0.1, 0.01]
    samples = [np.array([1.0, 1.0, math.inf]), np.array([0.1, np.nan, 0.1])]
    fit = fit_loglog(epsilons, samples, resamples=10)
    assert fit.slope == pytest.approx(1.0)
    assert fit.stderr == pytest.approx(0.0, abs=1e-12)


def test_degenerate_fits_raise():
    with pytest.raises(ValueError):
        fit_loglog([0.1], [np.ones(4)])
    with pytest.raises(ValueError):
        fit_loglog([0.1, 0.01], [np.ones(4), np.zeros(4)])
    with pytest.raises(ValueError):
        fit_loglog([0.1, 0.01], [np.ones(4), np.array([math.inf])])


def test_bootstrap_is_reproducible():
    rng = np.random.Generator(np.random.Philox(2))
    samples = [rng.exponential(size=200) for _ in range(4)]
    epsilons = [0.1, 0.05, 0.02, 0.01]
    assert fit_loglog(epsilons, samples, seed=5).stderr == \
        fit_loglog(epsilons, samples, seed=5).stderr


def test_moment_profile_of_constant():
    moments, errors = moment_profile(np.full(50, -2.0), [1, 2, 4])
    np.testing.assert_allclose(moments, 2.0)
    np.testing.assert_allclose(errors, 0.0, atol=1e-12)

    with pytest.raises(ValueError):
        moment_profile(np.array([1.0]), [1])


def test_moment_profile_is_increasing_in_p():
    rng = np.random.Generator(np.random.Philox(3))
    moments, _ = moment_profile(rng.normal(size=5000), [1, 2, 4, 8])
    assert np.all(np.diff(moments) > 0)
    assert moments[1] == pytest.approx(1.0, abs=0.05)


def test_chebyshev_proxy_bounds_the_empirical_tail():
    rng = np.random.Generator(np.random.Philox(4))
    samples = np.abs(rng.normal(size=20_000))
    delta, eps = 2.0, 0.5

    proxy = chebyshev_proxy(samples, delta, eps)
    empirical = eps * math.log(np.mean(samples > delta))
    assert empirical <= proxy + 1e-12


def test_chebyshev_proxy_handles_zero_samples():
    samples = np.array([0.0, 0.0, 1.0, 1.0])
    assert chebyshev_proxy(samples, 1.0, 0.1) == \
        pytest.approx(0.1 * math.log(0.5))
    with pytest.raises(ValueError):
        chebyshev_proxy(samples, 0.0, 0.1)
