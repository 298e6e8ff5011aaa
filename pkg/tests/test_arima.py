import numpy as np
import pytest

from housecast.arima import (
    ArimaSpec,
    fit_arima,
    forecast_arima,
    psi_weights,
    select_order,
    simulate_arma,
)
from housecast.errors import InsufficientData, ShapeMismatch
from housecast.series import TimeSeries


def ts(values, start=(2000, 1)):
    return TimeSeries("x", start, values)


class TestFitArima:
    def test_white_noise_mean_and_variance(self):
        rng = np.random.default_rng(7)
        w = rng.normal(5.0, 2.0, size=500)
        fit = fit_arima(ts(w), ArimaSpec(0, 0, 0))
        assert fit.intercept == pytest.approx(w.mean(), abs=1e-4)
        assert fit.sigma2 == pytest.approx(w.var(), rel=1e-4)
        assert fit.residuals.size == 500

    def test_arma22_recovery_single_seed(self):
        x = simulate_arma(
            2000, ar=(0.5, 0.2), ma=(0.3, 0.1), rng=np.random.default_rng(42)
        )
        fit = fit_arima(ts(x), ArimaSpec(2, 0, 2))
        est = np.concatenate([fit.ar_coeffs, fit.ma_coeffs])
        assert np.median(np.abs(est - np.array([0.5, 0.2, 0.3, 0.1]))) <= 0.15

    def test_aic_identity(self):
        x = simulate_arma(400, ar=(0.5,), rng=np.random.default_rng(1))
        fit = fit_arima(ts(x), ArimaSpec(1, 0, 0))
        assert fit.aic == pytest.approx(-2.0 * fit.loglik + 2.0 * fit.n_params, abs=1e-9)

    def test_differencing_reduces_residual_count(self):
        x = np.cumsum(simulate_arma(300, ar=(0.4,), rng=np.random.default_rng(2)))
        fit = fit_arima(ts(x), ArimaSpec(1, 1, 0))
        assert fit.residuals.size == 300 - 1 - 1  # one diff, one AR lag

    def test_too_short(self):
        with pytest.raises(InsufficientData):
            fit_arima(ts(np.arange(12.0)), ArimaSpec(2, 1, 2))

    def test_exog_regression_recovers_slope(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=400)
        y = 2.5 * x + simulate_arma(400, ar=(0.5,), rng=rng)
        fit = fit_arima(ts(y), ArimaSpec(1, 0, 0), exog=x[:, None])
        assert fit.exog_coeffs[0] == pytest.approx(2.5, abs=0.1)
        assert fit.ar_coeffs[0] == pytest.approx(0.5, abs=0.1)


class TestSelectOrder:
    def test_white_noise_majority_zero_order(self):
        picks = []
        for seed in range(15):
            w = ts(np.random.default_rng(seed).normal(size=400))
            spec, _ = select_order(w, d=0, p_max=2, q_max=2)
            picks.append((spec.p, spec.q))
        assert sum(1 for p in picks if p == (0, 0)) > len(picks) / 2

    def test_ar2_grid_minimum_property(self):
        x = simulate_arma(2000, ar=(0.6, 0.25), rng=np.random.default_rng(11))
        spec, fit = select_order(ts(x), d=0, p_max=4, q_max=4)
        assert spec.p >= 2
        true_fit = fit_arima(ts(x), ArimaSpec(2, 0, 0), n_cond=4)
        assert fit.aic <= true_fit.aic + 1e-9


class TestForecast:
    def test_constant_model_flat_forecast(self):
        w = np.random.default_rng(5).normal(10.0, 1.0, size=200)
        fit = fit_arima(ts(w), ArimaSpec(0, 0, 0))
        path = forecast_arima(fit, 6)
        assert np.allclose(path.values, fit.intercept, atol=0)
        assert np.allclose(path.variance, fit.sigma2, atol=1e-12)

    def test_ar1_closed_form(self):
        x = simulate_arma(300, ar=(0.7,), rng=np.random.default_rng(3))
        fit = fit_arima(ts(x), ArimaSpec(1, 0, 0), include_mean=False)
        path = forecast_arima(fit, 8)
        phi = fit.ar_coeffs[0]
        expected = phi ** np.arange(1, 9) * x[-1]
        assert np.max(np.abs(path.values - expected)) < 1e-9

    def test_ar1_decays_to_mean(self):
        x = simulate_arma(500, ar=(0.6,), intercept=2.0, rng=np.random.default_rng(4))
        fit = fit_arima(ts(x), ArimaSpec(1, 0, 0))
        path = forecast_arima(fit, 60)
        phi, mu = fit.ar_coeffs[0], fit.intercept
        closed = mu + phi ** np.arange(1, 61) * (x[-1] - mu)
        assert np.max(np.abs(path.values - closed)) < 1e-9

    def test_zero_exog_coeffs_match_plain(self):
        from dataclasses import replace

        x = simulate_arma(300, ar=(0.5,), rng=np.random.default_rng(6))
        fit = fit_arima(ts(x), ArimaSpec(1, 0, 1))
        rigged = replace(fit, exog_coeffs=np.zeros(2), exog=np.zeros((fit.residuals.size, 2)))
        future = np.random.default_rng(0).normal(size=(5, 2))
        plain = forecast_arima(fit, 5)
        with_exog = forecast_arima(rigged, 5, future_exog=future)
        assert np.array_equal(plain.values, with_exog.values)

    def test_exog_shape_checks(self):
        x = simulate_arma(300, ar=(0.5,), rng=np.random.default_rng(8))
        fit = fit_arima(ts(x), ArimaSpec(1, 0, 0))
        with pytest.raises(ShapeMismatch):
            forecast_arima(fit, 3, future_exog=np.ones((3, 1)))

    def test_psi_variance_monotone_for_integrated(self):
        x = np.cumsum(simulate_arma(300, ar=(0.4,), rng=np.random.default_rng(9)))
        fit = fit_arima(ts(x), ArimaSpec(1, 1, 0))
        path = forecast_arima(fit, 12)
        assert np.all(np.diff(path.variance) > 0)

    def test_forecast_months(self):
        x = simulate_arma(100, rng=np.random.default_rng(10))
        fit = fit_arima(ts(x, start=(2018, 11)), ArimaSpec(0, 0, 0))
        path = forecast_arima(fit, 3)
        assert path.months() == ["2027-03", "2027-04", "2027-05"]


class TestPsiWeights:
    def test_pure_ma(self):
        psi = psi_weights(np.array([]), np.array([0.4, 0.2]), 5)
        assert np.allclose(psi, [1.0, 0.4, 0.2, 0.0, 0.0])

    def test_ar1_geometric(self):
        psi = psi_weights(np.array([0.5]), np.array([]), 6)
        assert np.allclose(psi, 0.5 ** np.arange(6))

    def test_residuals_pass_ljung_box_on_simulated(self):
        from housecast.diagnostics import ljung_box

        passed = 0
        for seed in range(20):
            x = simulate_arma(
                800, ar=(0.5, 0.2), ma=(0.3,), rng=np.random.default_rng(seed)
            )
            fit = fit_arima(ts(x), ArimaSpec(2, 0, 1))
            passed += not ljung_box(fit.residuals, 12, fitted_params=3).reject_at_5pct
        assert passed >= 17  # >= 85%
