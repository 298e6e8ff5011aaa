"""ARMA/ARIMA estimation with optional regressors, order search and forecasting.

Estimation maximizes the conditional Gaussian likelihood: the first p
differenced observations are conditioned on and pre-sample innovations are
set to zero.  The innovation variance is concentrated out, so the optimizer
works on the conditional sum of squares.  Fits are immutable and the grid
search evaluates candidates independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from ._ols import ols_fit
from .errors import InsufficientData, OptimizerFailed, ShapeMismatch
from .series import ForecastPath, TimeSeries, month_add

_HUGE = 1e100


@dataclass(frozen=True)
class ArimaSpec:
    """Orders (p, d, q) of an autoregressive integrated moving-average model."""

    p: int
    d: int
    q: int

    def __post_init__(self):
        if min(self.p, self.d, self.q) < 0:
            raise ValueError("orders must be non-negative")

    def __str__(self) -> str:
        return f"({self.p},{self.d},{self.q})"


@dataclass(frozen=True)
class ArimaFit:
    """Fitted ARIMA(X) model.

    ``intercept`` is the mean of the differenced process (zero when the
    mean is excluded); ``residuals`` covers the usable sample, i.e. the
    differenced length minus p conditioning observations.
    """

    spec: ArimaSpec
    ar_coeffs: np.ndarray
    ma_coeffs: np.ndarray
    exog_coeffs: np.ndarray
    intercept: float
    residuals: np.ndarray
    sigma2: float
    loglik: float
    aic: float
    n_params: int
    stationary: bool
    invertible: bool
    endog: TimeSeries = field(repr=False)
    exog: np.ndarray | None = field(repr=False, default=None)
    n_cond: int = 0

    @property
    def has_exog(self) -> bool:
        return self.exog_coeffs.size > 0


def _lag_poly_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of 1 - c1 z - ... - ck z^k."""
    poly = np.concatenate(([1.0], -np.asarray(coeffs)))
    return np.roots(poly[::-1])


def _roots_outside_unit_circle(coeffs: np.ndarray) -> bool:
    if coeffs.size == 0:
        return True
    return bool(np.all(np.abs(_lag_poly_roots(coeffs)) > 1.0 + 1e-8))


def _has_common_factor(ar: np.ndarray, ma: np.ndarray, tol: float = 0.05) -> bool:
    """True when an AR root nearly coincides with an MA root.

    Such pairs cancel, leaving the remaining parameters unidentified, and
    routinely produce spurious likelihood gains in order searches.
    """
    if ar.size == 0 or ma.size == 0:
        return False
    ar_roots = _lag_poly_roots(ar)
    ma_roots = _lag_poly_roots(-ma)
    dist = np.abs(ar_roots[:, None] - ma_roots[None, :])
    return bool(np.min(dist) < tol)


def css_residuals(
    z: np.ndarray, ar: np.ndarray, ma: np.ndarray, n_cond: int | None = None
) -> np.ndarray:
    """Innovations of an ARMA recursion, conditioning on the first values.

    The first ``n_cond`` observations (default: the AR order) provide lags
    only; pre-sample innovations are zero.  The returned array has length
    ``len(z) - n_cond``.
    """
    p, q = ar.size, ma.size
    c = p if n_cond is None else n_cond
    if c < p:
        raise ValueError("n_cond must be at least the AR order")
    u = z[c:].copy()
    for i in range(1, p + 1):
        u -= ar[i - 1] * z[c - i : z.size - i]
    if q == 0:
        return u
    return lfilter([1.0], np.concatenate(([1.0], ma)), u)


def _unpack(params: np.ndarray, p: int, q: int, k_exog: int, mean: bool):
    idx = 0
    mu = params[idx] if mean else 0.0
    idx += int(mean)
    beta = params[idx : idx + k_exog]
    idx += k_exog
    ar = params[idx : idx + p]
    ma = params[idx + p : idx + p + q]
    return mu, beta, ar, ma


def _css_objective(params, y, X, p, q, k_exog, mean, n_cond):
    if not np.all(np.isfinite(params)):
        return _HUGE
    mu, beta, ar, ma = _unpack(params, p, q, k_exog, mean)
    if (ar.size and np.max(np.abs(ar)) > 50.0) or (ma.size and np.max(np.abs(ma)) > 50.0):
        return _HUGE
    with np.errstate(over="ignore", invalid="ignore"):
        z = y - mu
        if k_exog:
            z = z - X @ beta
        eps = css_residuals(z, ar, ma, n_cond)
        css = float(eps @ eps)
    if not np.isfinite(css):
        return _HUGE
    return css


def _initial_params(y, X, p, q, k_exog, mean):
    """Method-of-moments style starting point: OLS mean/exog, OLS AR, zero MA."""
    mu0, beta0 = 0.0, np.zeros(k_exog)
    z = y.copy()
    if mean or k_exog:
        cols = []
        if mean:
            cols.append(np.ones(y.size))
        if k_exog:
            cols.append(X)
        fit = ols_fit(y, np.column_stack(cols) if len(cols) > 1 else cols[0])
        if mean:
            mu0 = float(fit.beta[0])
            beta0 = fit.beta[1:].copy() if k_exog else beta0
        else:
            beta0 = fit.beta.copy()
        z = fit.residuals
    ar0 = np.zeros(p)
    if p > 0 and z.size > p + 2:
        lagmat = np.column_stack([z[p - i : z.size - i] for i in range(1, p + 1)])
        try:
            ar0 = ols_fit(z[p:], lagmat).beta
        except Exception:
            ar0 = np.zeros(p)
        ar0 = np.clip(ar0, -0.95, 0.95)
    parts = []
    if mean:
        parts.append([mu0])
    if k_exog:
        parts.append(beta0)
    parts.append(ar0)
    parts.append(np.zeros(q))
    return np.concatenate([np.asarray(part, dtype=float) for part in parts])


def fit_arima(
    endog: TimeSeries,
    spec: ArimaSpec,
    exog: np.ndarray | None = None,
    include_mean: bool | None = None,
    restarts: int = 5,
    n_cond: int | None = None,
) -> ArimaFit:
    """Estimate an ARIMA model, optionally with regressors on the target.

    With regressors the model is a regression with ARMA errors: the endog
    is differenced d times, the regressors enter contemporaneously on the
    differenced scale, and the regression error follows an ARMA(p, q).
    Regressor rows may be aligned with either the original or the
    differenced endog; the leading rows lost to differencing are dropped.

    ``include_mean`` defaults to True for d == 0 and False otherwise.
    Estimates start from method-of-moments values plus seeded random
    restarts; the best conditional-likelihood optimum wins.  An AR
    estimate with roots inside the unit circle is flagged, not rejected.
    """
    p, d, q = spec.p, spec.d, spec.q
    mean = (d == 0) if include_mean is None else include_mean
    cond = p if n_cond is None else max(n_cond, p)
    k_exog = 0
    X = None
    if exog is not None:
        X = np.asarray(exog, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        k_exog = X.shape[1]
        if X.shape[0] == len(endog):
            X = X[d:]
        elif X.shape[0] != len(endog) - d:
            raise ShapeMismatch(
                f"exog rows {X.shape[0]} match neither endog {len(endog)} "
                f"nor differenced length {len(endog) - d}"
            )
    if len(endog) <= d + p + q + k_exog + 10:
        raise InsufficientData(
            f"series of length {len(endog)} too short for spec {spec} with "
            f"{k_exog} regressors"
        )

    y = endog.values
    for _ in range(d):
        y = np.diff(y)

    x0 = _initial_params(y, X, p, q, k_exog, mean)
    rng = np.random.default_rng(0)  # fixed: fits must be reproducible
    starts = [x0]
    for _ in range(max(restarts - 1, 0)):
        jitter = rng.uniform(-0.2, 0.2, size=x0.size)
        if mean:
            jitter[0] *= max(abs(x0[0]), 1.0)
        starts.append(x0 + jitter)

    args = (y, X, p, q, k_exog, mean, cond)
    best, best_fun = None, np.inf
    if x0.size == 0:
        best = x0
    else:
        for start in starts:
            try:
                res = minimize(_css_objective, start, args=args, method="BFGS")
            except Exception:
                continue
            if not np.isfinite(res.fun) or res.fun >= _HUGE:
                continue
            if best is None or res.fun < best_fun:
                best, best_fun = res.x, res.fun
    if best is None:
        raise OptimizerFailed(f"ARIMA{spec} estimation failed from all starts")

    mu, beta, ar, ma = _unpack(best, p, q, k_exog, mean)
    z = y - mu
    if k_exog:
        z = z - X @ beta
    eps = css_residuals(z, ar, ma, cond)
    n_eff = eps.size
    sigma2 = float(eps @ eps) / n_eff
    loglik = -0.5 * n_eff * (math.log(2.0 * math.pi * sigma2) + 1.0)
    n_params = p + q + k_exog + int(mean) + 1  # +1 for the innovation variance
    aic = -2.0 * loglik + 2.0 * n_params
    return ArimaFit(
        spec=spec,
        ar_coeffs=np.asarray(ar, dtype=float).copy(),
        ma_coeffs=np.asarray(ma, dtype=float).copy(),
        exog_coeffs=np.asarray(beta, dtype=float).copy(),
        intercept=float(mu),
        residuals=eps,
        sigma2=sigma2,
        loglik=loglik,
        aic=aic,
        n_params=n_params,
        stationary=_roots_outside_unit_circle(np.asarray(ar)),
        invertible=_roots_outside_unit_circle(-np.asarray(ma)),
        endog=endog,
        exog=X,
        n_cond=cond,
    )


def select_order(
    endog: TimeSeries,
    d: int,
    exog: np.ndarray | None = None,
    p_max: int = 4,
    q_max: int = 4,
    include_mean: bool | None = None,
) -> tuple[ArimaSpec, ArimaFit]:
    """Grid-search (p, q) for fixed d by AIC.

    All candidates condition on the same sample so their AICs are
    comparable.  Ties within 1e-9 go to the smaller p+q, then the smaller
    p.  Candidates whose estimates violate stationarity or invertibility
    are ranked behind well-behaved ones: near-cancelling explosive
    representations can reach spuriously small conditional sums of squares.
    """
    if p_max > 5 or q_max > 5:
        raise ValueError("grid bounds above 5 are not supported")
    best_clean, best_any = None, None
    for p in range(p_max + 1):
        for q in range(q_max + 1):
            spec = ArimaSpec(p, d, q)
            try:
                fit = fit_arima(
                    endog, spec, exog=exog, include_mean=include_mean, n_cond=p_max
                )
            except (OptimizerFailed, InsufficientData):
                continue
            key = (fit.aic, p + q, p)
            if best_any is None or _better_key(key, best_any[0]):
                best_any = (key, spec, fit)
            clean = (
                fit.stationary
                and fit.invertible
                and not _has_common_factor(fit.ar_coeffs, fit.ma_coeffs)
            )
            if clean:
                if best_clean is None or _better_key(key, best_clean[0]):
                    best_clean = (key, spec, fit)
    chosen = best_clean if best_clean is not None else best_any
    if chosen is None:
        raise OptimizerFailed("every candidate order failed to fit")
    return chosen[1], chosen[2]


def _better_key(key, incumbent, tol: float = 1e-9) -> bool:
    if key[0] < incumbent[0] - tol:
        return True
    if key[0] > incumbent[0] + tol:
        return False
    return key[1:] < incumbent[1:]


def psi_weights(ar: np.ndarray, ma: np.ndarray, h: int) -> np.ndarray:
    """Moving-average representation weights psi_0..psi_{h-1} of an ARMA model."""
    p, q = ar.size, ma.size
    psi = np.zeros(h)
    psi[0] = 1.0
    for j in range(1, h):
        acc = ma[j - 1] if j <= q else 0.0
        for i in range(1, min(j, p) + 1):
            acc += ar[i - 1] * psi[j - i]
        psi[j] = acc
    return psi


def forecast_arima(
    fit: ArimaFit, h: int, future_exog: np.ndarray | None = None
) -> ForecastPath:
    """Iterate the fitted recursion h steps ahead and re-integrate to levels.

    Future innovations are zero; the variance path accumulates the
    moving-average weights of the integrated process.  Future regressor
    rows are required exactly when the fit used regressors.
    """
    if h < 1:
        raise ValueError("horizon must be at least 1")
    if fit.has_exog != (future_exog is not None):
        raise ShapeMismatch(
            "future_exog must be supplied exactly when the fit has regressors"
        )
    Xf = None
    if future_exog is not None:
        Xf = np.asarray(future_exog, dtype=float)
        if Xf.ndim == 1:
            Xf = Xf[:, None]
        if Xf.shape != (h, fit.exog_coeffs.size):
            raise ShapeMismatch(
                f"future_exog shape {Xf.shape} != ({h}, {fit.exog_coeffs.size})"
            )

    p, d, q = fit.spec.p, fit.spec.d, fit.spec.q
    y = fit.endog.values
    for _ in range(d):
        y = np.diff(y)
    z_hist = y - fit.intercept
    if fit.has_exog:
        z_hist = z_hist - fit.exog @ fit.exog_coeffs

    n = z_hist.size
    z_ext = np.concatenate((z_hist, np.zeros(h)))
    eps_ext = np.zeros(n + h)
    eps_ext[n - fit.residuals.size : n] = fit.residuals
    for k in range(h):
        t = n + k
        acc = 0.0
        for i in range(1, p + 1):
            acc += fit.ar_coeffs[i - 1] * z_ext[t - i]
        for j in range(1, q + 1):
            acc += fit.ma_coeffs[j - 1] * eps_ext[t - j]
        z_ext[t] = acc
    diff_forecast = z_ext[n:] + fit.intercept
    if Xf is not None:
        diff_forecast = diff_forecast + Xf @ fit.exog_coeffs

    # Walk the forecasts back up through each differencing stage.
    stages = [fit.endog.values]
    for _ in range(d):
        stages.append(np.diff(stages[-1]))
    tails = [float(s[-1]) for s in stages[:-1]]  # last value at each level
    levels = np.empty(h)
    for k in range(h):
        value = diff_forecast[k]
        for j in range(d - 1, -1, -1):
            value = tails[j] + value
            tails[j] = value
        levels[k] = value

    psi = psi_weights(fit.ar_coeffs, fit.ma_coeffs, h)
    for _ in range(d):
        psi = np.cumsum(psi)
    variance = fit.sigma2 * np.cumsum(psi**2)
    start = month_add(fit.endog.start, len(fit.endog))
    return ForecastPath(fit.endog.name, start, levels, variance)


def simulate_arma(
    n: int,
    ar=(),
    ma=(),
    intercept: float = 0.0,
    sigma: float = 1.0,
    rng: np.random.Generator | None = None,
    burn: int = 200,
) -> np.ndarray:
    """Draw from a Gaussian ARMA process, discarding a burn-in stretch."""
    rng = rng if rng is not None else np.random.default_rng()
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)
    eps = rng.normal(0.0, sigma, size=n + burn)
    # x_t = intercept + sum ar_i x_{t-i} + eps_t + sum ma_j eps_{t-j}
    shocks = lfilter(np.concatenate(([1.0], ma)), [1.0], eps) + intercept
    x = lfilter([1.0], np.concatenate(([1.0], -ar)), shocks)
    return x[burn:]
