"""Joint ARMA(m,n)-GARCH(1,1) estimation with Gaussian innovations.

The mean equation is an ARMA with a constant; the conditional variance
follows the one-lag recursion.  Both parameter blocks are estimated
together by maximum likelihood, since fixing either one biases the other.
Positivity and persistence below one are built into the parameterization,
so every point the optimizer visits yields strictly positive variances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from .arima import css_residuals
from .diagnostics import TestReport, arch_lm, jarque_bera, ljung_box
from .errors import InsufficientData, InvalidParameter, OptimizerFailed
from .series import ForecastPath, TimeSeries, month_add

_MAX_PERSISTENCE = 0.999


def variance_step(
    alpha0: float, alpha1: float, beta1: float, eps2_prev: float, var_prev: float
) -> float:
    """One step of the conditional-variance recursion."""
    if alpha0 <= 0.0:
        raise InvalidParameter("alpha0 must be strictly positive")
    if min(alpha1, beta1, eps2_prev, var_prev) < 0.0:
        raise InvalidParameter("variance inputs must be non-negative")
    return alpha0 + alpha1 * eps2_prev + beta1 * var_prev


@dataclass(frozen=True)
class GarchFit:
    """Fitted ARMA-GARCH model with conditional variances and diagnostics."""

    mean_order: tuple[int, int]
    mu: float
    arma_ar: np.ndarray
    arma_ma: np.ndarray
    alpha0: float
    alpha1: float
    beta1: float
    residuals: np.ndarray
    cond_var: np.ndarray
    std_resid: np.ndarray
    loglik: float
    aic: float
    stderr: np.ndarray
    series: TimeSeries = field(repr=False)

    @property
    def persistence(self) -> float:
        return self.alpha1 + self.beta1

    @property
    def variance_stationary(self) -> bool:
        return self.persistence < 1.0


def garch_filter(
    values: np.ndarray,
    mu: float,
    ar: np.ndarray,
    ma: np.ndarray,
    alpha0: float,
    alpha1: float,
    beta1: float,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Run the mean and variance recursions for one parameter point.

    Returns (residuals, conditional variances, log-likelihood), where the
    log-likelihood is -0.5 * sum(log var_t + eps_t^2 / var_t) over the
    usable sample.  The recursion starts from the mean squared residual.
    """
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)
    u = values - mu
    eps = css_residuals(u, ar, ma)
    eps2 = eps**2
    backcast = float(np.mean(eps2))
    n = eps.size
    sigma2 = np.empty(n)
    sigma2[0] = backcast
    if n > 1:
        rhs = alpha0 + alpha1 * eps2[:-1]
        sigma2[1:] = lfilter([1.0], [1.0, -beta1], rhs, zi=[beta1 * sigma2[0]])[0]
    loglik = -0.5 * float(np.sum(np.log(sigma2) + eps2 / sigma2))
    return eps, sigma2, loglik


def _split_params(params: np.ndarray, m: int, n: int):
    mu = params[0]
    ar = params[1 : 1 + m]
    ma = params[1 + m : 1 + m + n]
    log_a0, a, b = params[1 + m + n :]
    rho = _MAX_PERSISTENCE / (1.0 + math.exp(-a))
    frac = 1.0 / (1.0 + math.exp(-b))
    alpha0 = math.exp(log_a0)
    return mu, ar, ma, alpha0, rho * frac, rho * (1.0 - frac)


def _neg_loglik(params, values, m, n):
    if not np.all(np.isfinite(params)) or abs(params[-2]) > 40 or abs(params[-1]) > 40:
        return 1e100
    mu, ar, ma, alpha0, alpha1, beta1 = _split_params(params, m, n)
    if not np.isfinite(alpha0) or alpha0 <= 0.0:
        return 1e100
    if (ar.size and np.max(np.abs(ar)) > 50) or (ma.size and np.max(np.abs(ma)) > 50):
        return 1e100
    with np.errstate(over="ignore", invalid="ignore"):
        _, _, ll = garch_filter(values, mu, ar, ma, alpha0, alpha1, beta1)
    if not np.isfinite(ll):
        return 1e100
    return -ll


def fit_arma_garch(
    series: TimeSeries,
    mean_order: tuple[int, int] = (1, 1),
    garch_order: tuple[int, int] = (1, 1),
    restarts: int = 3,
) -> GarchFit:
    """Jointly estimate the ARMA mean and GARCH(1,1) variance parameters.

    ``mu`` is parameterized as the process mean: the ARMA recursion runs
    on the centered series.  The optimizer works on transformed parameters
    (log variance intercept, logistic persistence split), which keeps
    alpha0 > 0, alpha1/beta1 >= 0 and alpha1 + beta1 < 0.999 at every
    visited point.  The returned log-likelihood is never below its value
    at the starting point.  Standard errors come from a finite-difference
    Hessian in the natural parameter space.
    """
    if garch_order != (1, 1):
        raise InvalidParameter("only GARCH(1,1) variance dynamics are supported")
    m, n_ma = mean_order
    if m < 0 or n_ma < 0:
        raise InvalidParameter("mean orders must be non-negative")
    values = series.values
    if values.size < m + n_ma + 30:
        raise InsufficientData("series too short for the requested mean order")

    # Mean-equation start: sample mean plus OLS AR on the centered series;
    # variance start: mild ARCH profile around the residual variance.
    mu0 = float(values.mean())
    ar0 = np.zeros(m)
    centered = values - mu0
    if m > 0:
        from ._ols import ols_fit

        lagmat = np.column_stack(
            [centered[m - i : centered.size - i] for i in range(1, m + 1)]
        )
        ar0 = np.clip(ols_fit(centered[m:], lagmat).beta, -0.95, 0.95)
    eps0 = css_residuals(centered, ar0, np.zeros(0))
    var0 = float(np.mean(eps0**2)) if eps0.size else float(values.var())
    rho0, frac0 = 0.9, 0.1 / 0.9
    x0 = np.concatenate(
        (
            [mu0],
            ar0,
            np.zeros(n_ma),
            [
                math.log(max(var0 * (1.0 - rho0), 1e-12)),
                math.log(rho0 / (_MAX_PERSISTENCE - rho0)),
                math.log(frac0 / (1.0 - frac0)),
            ],
        )
    )

    rng = np.random.default_rng(0)  # fixed: fits must be reproducible
    starts = [x0]
    for _ in range(max(restarts - 1, 0)):
        jitter = rng.uniform(-0.3, 0.3, size=x0.size)
        jitter[0] *= max(abs(mu0), 1.0)
        starts.append(x0 + jitter)

    best_x, best_f = x0, _neg_loglik(x0, values, m, n_ma)
    converged = best_f < 1e99
    for start in starts:
        try:
            res = minimize(_neg_loglik, start, args=(values, m, n_ma), method="BFGS")
        except Exception:
            continue
        if np.isfinite(res.fun) and res.fun < best_f:
            best_x, best_f = res.x, res.fun
            converged = True
    if not converged:
        raise OptimizerFailed("ARMA-GARCH likelihood could not be evaluated")

    mu, ar, ma, alpha0, alpha1, beta1 = _split_params(best_x, m, n_ma)
    eps, sigma2, loglik = garch_filter(values, mu, ar, ma, alpha0, alpha1, beta1)
    n_params = 1 + m + n_ma + 3
    aic = -2.0 * loglik + 2.0 * n_params
    natural = np.concatenate(([mu], ar, ma, [alpha0, alpha1, beta1]))
    stderr = _hessian_stderr(natural, values, m, n_ma)
    return GarchFit(
        mean_order=(m, n_ma),
        mu=float(mu),
        arma_ar=np.asarray(ar, dtype=float).copy(),
        arma_ma=np.asarray(ma, dtype=float).copy(),
        alpha0=float(alpha0),
        alpha1=float(alpha1),
        beta1=float(beta1),
        residuals=eps,
        cond_var=sigma2,
        std_resid=eps / np.sqrt(sigma2),
        loglik=loglik,
        aic=aic,
        stderr=stderr,
        series=series,
    )


def _natural_negll(theta, values, m, n_ma):
    mu = theta[0]
    ar = theta[1 : 1 + m]
    ma = theta[1 + m : 1 + m + n_ma]
    alpha0, alpha1, beta1 = theta[1 + m + n_ma :]
    if alpha0 <= 0 or alpha1 < 0 or beta1 < 0:
        return np.nan
    with np.errstate(over="ignore", invalid="ignore"):
        _, _, ll = garch_filter(values, mu, ar, ma, alpha0, alpha1, beta1)
    return -ll


def _hessian_stderr(theta, values, m, n_ma) -> np.ndarray:
    """Finite-difference Hessian standard errors; NaN when not invertible."""
    k = theta.size
    h = np.maximum(np.abs(theta), 1e-4) * 1e-4
    hess = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i], ej[j] = h[i], h[j]
            fpp = _natural_negll(theta + ei + ej, values, m, n_ma)
            fpm = _natural_negll(theta + ei - ej, values, m, n_ma)
            fmp = _natural_negll(theta - ei + ej, values, m, n_ma)
            fmm = _natural_negll(theta - ei - ej, values, m, n_ma)
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4 * h[i] * h[j])
    try:
        cov = np.linalg.inv(hess)
        diag = np.diag(cov)
        with np.errstate(invalid="ignore"):
            return np.where(diag > 0, np.sqrt(np.abs(diag)), np.nan)
    except np.linalg.LinAlgError:
        return np.full(k, np.nan)


def forecast_garch(fit: GarchFit, h: int) -> ForecastPath:
    """Forecast the mean by the ARMA recursion and iterate the variance.

    The variance attached to the path is the conditional-variance forecast
    itself: one exact step from the last residual and variance, then the
    persistence iteration for later horizons.
    """
    if h < 1:
        raise ValueError("horizon must be at least 1")
    m, n_ma = fit.mean_order
    n = len(fit.series)
    z_ext = np.concatenate((fit.series.values - fit.mu, np.zeros(h)))
    eps_ext = np.zeros(n + h)
    eps_ext[n - fit.residuals.size : n] = fit.residuals
    for k in range(h):
        t = n + k
        acc = 0.0
        for i in range(1, m + 1):
            acc += fit.arma_ar[i - 1] * z_ext[t - i]
        for j in range(1, n_ma + 1):
            acc += fit.arma_ma[j - 1] * eps_ext[t - j]
        z_ext[t] = acc
    mean_path = z_ext[n:] + fit.mu

    var_path = np.empty(h)
    var_path[0] = variance_step(
        fit.alpha0,
        fit.alpha1,
        fit.beta1,
        float(fit.residuals[-1] ** 2),
        float(fit.cond_var[-1]),
    )
    for k in range(1, h):
        var_path[k] = fit.alpha0 + fit.persistence * var_path[k - 1]

    start = month_add(fit.series.start, n)
    return ForecastPath(fit.series.name, start, mean_path, var_path)


def diagnose_fit(
    fit: GarchFit, lb_lags: tuple[int, ...] = (10, 15, 20), arch_q: int = 12
) -> list[TestReport]:
    """Standardized-residual battery: serial correlation of z and z^2 at
    several lags, an ARCH-LM check, and normality."""
    z = fit.std_resid
    m, n_ma = fit.mean_order
    reports = []
    for lag in lb_lags:
        lb = ljung_box(z, lag, fitted_params=min(m + n_ma, lag - 1))
        reports.append(
            TestReport(f"ljung-box[z,{lag}]", lb.statistic, lb.p_value, lag)
        )
    for lag in lb_lags:
        lb = ljung_box(z**2, lag)
        reports.append(
            TestReport(f"ljung-box[z^2,{lag}]", lb.statistic, lb.p_value, lag)
        )
    am = arch_lm(z, arch_q)
    reports.append(TestReport("arch-lm[z]", am.statistic, am.p_value, arch_q))
    jb = jarque_bera(z)
    reports.append(TestReport("jarque-bera[z]", jb.statistic, jb.p_value, 2))
    return reports


def simulate_garch(
    n: int,
    alpha0: float,
    alpha1: float,
    beta1: float,
    mu: float = 0.0,
    ar=(),
    ma=(),
    rng: np.random.Generator | None = None,
    burn: int = 500,
) -> np.ndarray:
    """Draw from a Gaussian ARMA-GARCH process, discarding a burn-in stretch."""
    rng = rng if rng is not None else np.random.default_rng()
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)
    total = n + burn
    z = rng.standard_normal(total)
    eps = np.empty(total)
    sigma2 = np.empty(total)
    uncond = alpha0 / max(1.0 - alpha1 - beta1, 1e-6)
    sigma2[0] = uncond
    eps[0] = math.sqrt(sigma2[0]) * z[0]
    for t in range(1, total):
        sigma2[t] = alpha0 + alpha1 * eps[t - 1] ** 2 + beta1 * sigma2[t - 1]
        eps[t] = math.sqrt(sigma2[t]) * z[t]
    shocks = lfilter(np.concatenate(([1.0], ma)), [1.0], eps)
    x = lfilter([1.0], np.concatenate(([1.0], -ar)), shocks) + mu
    return x[burn:]


def select_mean_order(
    series: TimeSeries,
    candidates: list[tuple[int, int]],
    holdout_fraction: float = 0.2,
) -> tuple[tuple[int, int], GarchFit]:
    """Pick the ARMA mean order by holdout prediction error, requiring the
    residual battery to pass; falls back to the raw error ranking if every
    candidate fails some diagnostic."""
    from .ensemble import evaluate
    from .series import chrono_split

    train, test = chrono_split(series, 1.0 - holdout_fraction)
    scored = []
    for order in candidates:
        try:
            fit = fit_arma_garch(train, order)
            path = forecast_garch(fit, len(test))
            mape = evaluate(test.values, path.values).mape
            passes = all(not r.reject_at_5pct for r in diagnose_fit(fit))
            scored.append((mape, passes, order))
        except (OptimizerFailed, InsufficientData):
            continue
    if not scored:
        raise OptimizerFailed("no ARMA-GARCH candidate could be fit")
    passing = [s for s in scored if s[1]]
    pool = passing if passing else scored
    best = min(pool, key=lambda s: s[0])
    order = best[2]
    return order, fit_arma_garch(series, order)
