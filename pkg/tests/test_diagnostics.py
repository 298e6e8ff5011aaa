import numpy as np
import pytest
from scipy import integrate as sciint

from housecast.diagnostics import (
    adf_test,
    arch_lm,
    interpolate_pvalue,
    jarque_bera,
    ljung_box,
    select_differencing_order,
)
from housecast.errors import DegenerateSeries, InvalidDof, SingularDesign
from housecast.series import TimeSeries


def ts(values):
    return TimeSeries("x", (2000, 1), values)


class TestAdf:
    def test_random_walk_not_rejected(self):
        misses = 0
        for seed in range(50):
            rw = np.cumsum(np.random.default_rng(seed).normal(size=500))
            misses += adf_test(ts(rw)).reject_at_5pct
        assert misses <= 5  # >= 90% fail-to-reject

    def test_ar_half_rejected(self):
        hits = 0
        for seed in range(50):
            rng = np.random.default_rng(seed)
            x = np.empty(500)
            x[0] = 0.0
            for t in range(1, 500):
                x[t] = 0.5 * x[t - 1] + rng.normal()
            hits += adf_test(ts(x)).reject_at_5pct
        assert hits >= 48  # >= 95% power

    def test_affine_invariance(self):
        rng = np.random.default_rng(7)
        x = np.cumsum(rng.normal(size=300))
        base = adf_test(ts(x), max_lag=4)
        scaled = adf_test(ts(5.0 * x + 100.0), max_lag=4)
        assert scaled.statistic == pytest.approx(base.statistic, abs=1e-9)
        assert scaled.p_value == pytest.approx(base.p_value, abs=1e-9)

    def test_trend_spec_runs(self):
        rng = np.random.default_rng(8)
        x = np.cumsum(rng.normal(size=200)) + 0.5 * np.arange(200)
        report = adf_test(ts(x), deterministic="trend")
        assert 0.0 <= report.p_value <= 1.0

    def test_pvalue_clamped(self):
        cv = {0.01: -3.43, 0.05: -2.86, 0.10: -2.57}
        assert interpolate_pvalue(-50.0, cv) == 0.001
        assert interpolate_pvalue(50.0, cv) == 0.999
        assert interpolate_pvalue(-2.86, cv) == pytest.approx(0.05, abs=1e-12)


class TestLjungBox:
    def test_zero_autocorrelation_gives_p_one(self):
        # [1, 0, -1, 0] repeated has exactly zero lag-1 sample autocovariance,
        # so Q = 0 and the p-value is 1
        x = np.array([1.0, 0.0, -1.0, 0.0] * 20)
        report = ljung_box(x, lags=1)
        assert report.statistic == pytest.approx(0.0, abs=1e-24)
        assert report.p_value == pytest.approx(1.0, abs=1e-12)

    def test_monotone_in_lags(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=200)
        stats = [ljung_box(x, lags=h).statistic for h in range(1, 15)]
        assert all(b >= a - 1e-12 for a, b in zip(stats, stats[1:]))

    def test_size_on_iid(self):
        rej = 0
        for seed in range(200):
            x = np.random.default_rng(seed).normal(size=500)
            rej += ljung_box(x, lags=10).reject_at_5pct
        assert 0.02 <= rej / 200 <= 0.08

    def test_invalid_dof(self):
        with pytest.raises(InvalidDof):
            ljung_box(np.random.default_rng(0).normal(size=100), lags=3, fitted_params=3)

    def test_well_fit_arma_residuals(self):
        from housecast.arima import ArimaSpec, fit_arima, simulate_arma

        good = 0
        for seed in range(10):
            x = simulate_arma(600, ar=(0.6,), ma=(0.3,), rng=np.random.default_rng(seed))
            fit = fit_arima(ts(x), ArimaSpec(1, 0, 1))
            good += not ljung_box(fit.residuals, 10, fitted_params=2).reject_at_5pct
        assert good >= 8


class TestArchLm:
    def test_power_on_garch(self):
        from housecast.garch import simulate_garch

        hits = 0
        for seed in range(40):
            x = simulate_garch(500, 0.2, 0.3, 0.6, rng=np.random.default_rng(seed))
            hits += arch_lm(x, 4).reject_at_5pct
        assert hits >= 36

    def test_size_on_iid(self):
        rej = 0
        for seed in range(200):
            x = np.random.default_rng(seed).normal(size=500)
            rej += arch_lm(x, 4).reject_at_5pct
        assert 0.02 <= rej / 200 <= 0.08

    def test_constant_residuals(self):
        with pytest.raises(SingularDesign):
            arch_lm(np.ones(100), 4)


class TestJarqueBera:
    def test_symmetric_mesokurtic_is_zero(self):
        # {+-2, +-2, eight zeros}: symmetric (skew 0) and m4/m2^2 exactly 3
        x = np.array([2.0, -2.0, 2.0, -2.0] + [0.0] * 8)
        report = jarque_bera(x)
        assert report.statistic == pytest.approx(0.0, abs=1e-24)
        assert report.p_value == pytest.approx(1.0, abs=1e-12)

    def test_size_normal(self):
        rej = 0
        for seed in range(200):
            x = np.random.default_rng(seed).normal(size=1000)
            rej += jarque_bera(x).reject_at_5pct
        assert 0.02 <= rej / 200 <= 0.08

    def test_power_exponential(self):
        hits = 0
        for seed in range(50):
            x = np.random.default_rng(seed).exponential(size=1000)
            hits += jarque_bera(x).reject_at_5pct
        assert hits >= 50 * 0.99

    def test_zero_variance(self):
        with pytest.raises(DegenerateSeries):
            jarque_bera(np.zeros(20))


class TestChiSquareOracle:
    def test_sf_matches_quadrature(self):
        # the chi-square upper tail used everywhere must agree with direct
        # numerical integration of the density
        from scipy.stats import chi2

        for dof in (1, 2, 5, 10):
            for x in (0.5, 1.0, 3.0, 10.0):
                def pdf(t, k=dof):
                    from math import exp, gamma, log

                    return exp((k / 2 - 1) * log(t) - t / 2 - log(gamma(k / 2)) - (k / 2) * log(2))

                tail, _ = sciint.quad(pdf, x, np.inf)
                assert chi2.sf(x, dof) == pytest.approx(tail, abs=1e-8)


class TestDifferencingSearch:
    def test_orders_on_constructed_series(self):
        rng = np.random.default_rng(3)
        stationary = ts(rng.normal(size=300))
        assert select_differencing_order(stationary)[0] == 0
        walk = ts(np.cumsum(rng.normal(size=300)))
        assert select_differencing_order(walk)[0] == 1
        double = ts(np.cumsum(np.cumsum(rng.normal(size=300))))
        assert select_differencing_order(double)[0] == 2

    def test_capped_at_max_rounds(self):
        rng = np.random.default_rng(4)
        triple = ts(np.cumsum(np.cumsum(np.cumsum(rng.normal(size=400)))))
        d, reports = select_differencing_order(triple, max_rounds=3)
        assert d <= 3 and len(reports) == d + 1
