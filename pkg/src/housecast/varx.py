"""Vector autoregression with deterministic terms and optional regressors.

Estimation is per-equation least squares on a shared design matrix.
Structural summaries: orthogonalized impulse responses identified by the
Cholesky factor in the input column order, with residual-resampling
bootstrap bands, and block exclusion tests for predictive content.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import stats

from .diagnostics import TestReport
from .errors import (
    DegenerateCovariance,
    InsufficientData,
    InvalidParameter,
    ShapeMismatch,
    SingularDesign,
)
from .series import ForecastPath, Month, month_add


@dataclass(frozen=True)
class VarxFit:
    """Least-squares VAR(p) fit with optional contemporaneous regressors."""

    names: tuple[str, ...]
    lag_order: int
    deterministic: str
    coef_matrices: np.ndarray  # p x k x k, coef_matrices[i][eq, var]
    const: np.ndarray
    trend: np.ndarray | None
    exog_coeffs: np.ndarray | None
    residuals: np.ndarray = field(repr=False)
    sigma_u: np.ndarray = field(repr=False)
    r_squared: np.ndarray
    aic: float
    portmanteau: TestReport
    start: Month
    levels: np.ndarray = field(repr=False)
    exog: np.ndarray | None = field(repr=False)
    _xtx_inv: np.ndarray = field(repr=False)
    _col_names: tuple[str, ...] = field(repr=False)

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def nobs(self) -> int:
        return self.residuals.shape[0]


def _design(Y, p, deterministic, exog):
    n, k = Y.shape
    rows = np.arange(p, n)
    cols = [np.ones(rows.size)]
    col_names = ["const"]
    if deterministic == "const+trend":
        cols.append(rows.astype(float))
        col_names.append("trend")
    for i in range(1, p + 1):
        cols.append(Y[rows - i])
        col_names.extend([f"L{i}.{j}" for j in range(k)])
    if exog is not None:
        cols.append(exog[rows])
        col_names.extend([f"x{j}" for j in range(exog.shape[1])])
    Z = np.column_stack(cols)
    return rows, Z, tuple(col_names)


def _portmanteau(resid: np.ndarray, p: int, h: int) -> TestReport:
    """Adjusted multivariate portmanteau test on the residual matrix."""
    t, k = resid.shape
    u = resid - resid.mean(axis=0)
    c0 = u.T @ u / t
    c0_inv = np.linalg.inv(c0)
    q = 0.0
    for j in range(1, h + 1):
        cj = u[j:].T @ u[:-j] / t
        q += np.trace(cj.T @ c0_inv @ cj @ c0_inv) / (t - j)
    q *= t * t
    dof = k * k * (h - p)
    pval = float(stats.chi2.sf(q, dof)) if dof > 0 else 1.0
    return TestReport("portmanteau", float(q), pval, h)


def fit_varx(
    table: np.ndarray,
    p: int | str = "auto",
    deterministic: str = "const",
    exog: np.ndarray | None = None,
    p_max: int = 8,
    names: tuple[str, ...] = (),
    start: Month = (1900, 1),
) -> VarxFit:
    """Fit a VAR(p) by per-equation OLS.

    ``p="auto"`` scans 1..p_max on a common sample and keeps the lag
    count minimizing the system AIC.  ``exog`` enters contemporaneously.
    Residual serial correlation is summarized by an adjusted portmanteau
    test carried on the fit.
    """
    Y = np.asarray(table, dtype=float)
    if Y.ndim != 2:
        raise ShapeMismatch("table must be two-dimensional")
    n, k = Y.shape
    if exog is not None:
        exog = np.asarray(exog, dtype=float)
        if exog.ndim == 1:
            exog = exog[:, None]
        if exog.shape[0] != n:
            raise ShapeMismatch("exog must align row-for-row with the table")
    if not names:
        names = tuple(f"y{i}" for i in range(k))
    if deterministic not in ("const", "const+trend"):
        raise ValueError(f"unknown deterministic spec {deterministic!r}")

    if p == "auto":
        best_p, best_aic = 1, np.inf
        for cand in range(1, p_max + 1):
            rows, Z, _ = _design(Y, cand, deterministic, exog)
            # common sample so information criteria are comparable
            cut = p_max - cand
            Zc, Yc = Z[cut:], Y[rows][cut:]
            if Zc.shape[0] <= Zc.shape[1] + 2:
                continue
            beta, *_ = np.linalg.lstsq(Zc, Yc, rcond=None)
            U = Yc - Zc @ beta
            sigma = U.T @ U / Zc.shape[0]
            sign, logdet = np.linalg.slogdet(sigma)
            if sign <= 0:
                continue
            aic = logdet + 2.0 * (k * Zc.shape[1]) / Zc.shape[0]
            if aic < best_aic - 1e-12:
                best_aic, best_p = aic, cand
        p = best_p
    p = int(p)
    if p < 1:
        raise InvalidParameter("lag order must be at least 1")
    if n < k * p + 20:
        raise InsufficientData(f"need at least {k * p + 20} rows, have {n}")

    rows, Z, col_names = _design(Y, p, deterministic, exog)
    target = Y[rows]
    gram = Z.T @ Z
    try:
        chol = scipy.linalg.cho_factor(gram)
    except scipy.linalg.LinAlgError as exc:
        raise SingularDesign("VAR design matrix is singular") from exc
    beta = scipy.linalg.cho_solve(chol, Z.T @ target)
    xtx_inv = scipy.linalg.cho_solve(chol, np.eye(Z.shape[1]))
    resid = target - Z @ beta
    t_eff, ncols = Z.shape
    sigma_u = resid.T @ resid / (t_eff - ncols)

    tss = np.sum((target - target.mean(axis=0)) ** 2, axis=0)
    rss = np.sum(resid**2, axis=0)
    r_squared = 1.0 - rss / tss

    sigma_mle = resid.T @ resid / t_eff
    sign, logdet = np.linalg.slogdet(sigma_mle)
    aic = logdet + 2.0 * (k * ncols) / t_eff

    det_cols = 2 if deterministic == "const+trend" else 1
    const = beta[0].copy()
    trend = beta[1].copy() if deterministic == "const+trend" else None
    coef = np.empty((p, k, k))
    for i in range(p):
        block = beta[det_cols + i * k : det_cols + (i + 1) * k]
        coef[i] = block.T  # equations in rows
    exog_coeffs = None
    if exog is not None:
        exog_coeffs = beta[det_cols + p * k :].T.copy()

    h_port = max(10, p + 4)
    port = _portmanteau(resid, p, min(h_port, t_eff // 3)) if t_eff > 18 else TestReport(
        "portmanteau", 0.0, 1.0, 0
    )
    return VarxFit(
        names=names,
        lag_order=p,
        deterministic=deterministic,
        coef_matrices=coef,
        const=const,
        trend=trend,
        exog_coeffs=exog_coeffs,
        residuals=resid,
        sigma_u=sigma_u,
        r_squared=r_squared,
        aic=float(aic),
        portmanteau=port,
        start=start,
        levels=Y,
        exog=exog,
        _xtx_inv=xtx_inv,
        _col_names=col_names,
    )


def forecast_varx(
    fit: VarxFit, h: int, future_exog: np.ndarray | None = None
) -> dict[str, ForecastPath]:
    """Iterate the VAR recursion h steps, extending deterministic terms."""
    if h < 1:
        raise ValueError("horizon must be at least 1")
    if (fit.exog_coeffs is not None) != (future_exog is not None):
        raise ShapeMismatch("future_exog required exactly when the fit used exog")
    if future_exog is not None:
        future_exog = np.asarray(future_exog, dtype=float)
        if future_exog.ndim == 1:
            future_exog = future_exog[:, None]
        if future_exog.shape != (h, fit.exog_coeffs.shape[1]):
            raise ShapeMismatch("future_exog must have h rows matching the exog width")

    k, p = fit.n_vars, fit.lag_order
    n = fit.levels.shape[0]
    ext = np.vstack([fit.levels, np.zeros((h, k))])
    for step in range(h):
        t = n + step
        acc = fit.const.copy()
        if fit.trend is not None:
            acc = acc + fit.trend * float(t)
        for i in range(1, p + 1):
            acc = acc + fit.coef_matrices[i - 1] @ ext[t - i]
        if future_exog is not None:
            acc = acc + fit.exog_coeffs @ future_exog[step]
        ext[t] = acc
    first = month_add(fit.start, n)
    return {
        name: ForecastPath(name, first, ext[n:, j].copy())
        for j, name in enumerate(fit.names)
    }


def ma_coefficients(fit: VarxFit, horizon: int) -> np.ndarray:
    """Moving-average representation Psi_0..Psi_horizon of the fitted VAR."""
    k, p = fit.n_vars, fit.lag_order
    psi = np.zeros((horizon + 1, k, k))
    psi[0] = np.eye(k)
    for hstep in range(1, horizon + 1):
        acc = np.zeros((k, k))
        for i in range(1, min(hstep, p) + 1):
            acc += fit.coef_matrices[i - 1] @ psi[hstep - i]
        psi[hstep] = acc
    return psi


@dataclass(frozen=True)
class ImpulseResponse:
    """Orthogonalized response path of one variable to a one-sigma shock."""

    impulse: str
    response: str
    horizons: np.ndarray
    responses: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def _orth_irf_path(fit: VarxFit, imp: int, resp: int, horizon: int) -> np.ndarray:
    try:
        chol = np.linalg.cholesky(fit.sigma_u)
    except np.linalg.LinAlgError as exc:
        raise DegenerateCovariance("residual covariance is not positive definite") from exc
    psi = ma_coefficients(fit, horizon)
    return np.array([(psi[hstep] @ chol)[resp, imp] for hstep in range(horizon + 1)])


def impulse_response(
    fit: VarxFit,
    impulse: str,
    response: str,
    horizon: int = 6,
    boot_reps: int = 500,
    seed: int = 0,
) -> ImpulseResponse:
    """Orthogonalized impulse response with bootstrap confidence bands.

    Identification is recursive in the order the variables appear in the
    fitted table.  Bands resample residual rows with replacement, rebuild
    the sample from the fitted recursion, refit, and take the 2.5/97.5
    percentiles; they are widened where needed so the point estimate is
    always inside.
    """
    if impulse not in fit.names or response not in fit.names:
        raise InvalidParameter("impulse and response must name fitted variables")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    imp, resp = fit.names.index(impulse), fit.names.index(response)
    point = _orth_irf_path(fit, imp, resp, horizon)

    rng = np.random.default_rng(seed)
    k, p = fit.n_vars, fit.lag_order
    Y = fit.levels
    n = Y.shape[0]
    u = fit.residuals - fit.residuals.mean(axis=0)
    paths = np.empty((boot_reps, horizon + 1))
    kept = 0
    for _ in range(boot_reps):
        draw = u[rng.integers(0, u.shape[0], size=n - p)]
        sim = np.empty_like(Y)
        sim[:p] = Y[:p]
        for t in range(p, n):
            acc = fit.const.copy()
            if fit.trend is not None:
                acc = acc + fit.trend * float(t)
            for i in range(1, p + 1):
                acc = acc + fit.coef_matrices[i - 1] @ sim[t - i]
            if fit.exog is not None:
                acc = acc + fit.exog_coeffs @ fit.exog[t]
            sim[t] = acc + draw[t - p]
        try:
            refit = fit_varx(
                sim,
                p=p,
                deterministic=fit.deterministic,
                exog=fit.exog,
                names=fit.names,
            )
            paths[kept] = _orth_irf_path(refit, imp, resp, horizon)
            kept += 1
        except (SingularDesign, DegenerateCovariance):
            continue
    if kept == 0:
        raise DegenerateCovariance("no bootstrap replication produced a valid fit")
    lower = np.percentile(paths[:kept], 2.5, axis=0)
    upper = np.percentile(paths[:kept], 97.5, axis=0)
    return ImpulseResponse(
        impulse=impulse,
        response=response,
        horizons=np.arange(horizon + 1, dtype=float),
        responses=point,
        lower=np.minimum(lower, point),
        upper=np.maximum(upper, point),
    )


def _wald_block_test(fit: VarxFit, cause: str, caused: list[str], label: str) -> TestReport:
    k, p = fit.n_vars, fit.lag_order
    cause_idx = fit.names.index(cause)
    det_cols = 2 if fit.deterministic == "const+trend" else 1
    lag_cols = [det_cols + (i - 1) * k + cause_idx for i in range(1, p + 1)]
    caused_idx = [fit.names.index(name) for name in caused]

    ncols = fit._xtx_inv.shape[0]
    b = np.empty(len(caused_idx) * p)
    # covariance of the stacked coefficients: sigma_u[eq,eq'] * (Z'Z)^-1
    cov = np.empty((b.size, b.size))
    coefs_by_eq = _stacked_coefs(fit)
    for a, eq_a in enumerate(caused_idx):
        for pos, col in enumerate(lag_cols):
            b[a * p + pos] = coefs_by_eq[eq_a][col]
        for c, eq_c in enumerate(caused_idx):
            block = fit.sigma_u[eq_a, eq_c] * fit._xtx_inv[np.ix_(lag_cols, lag_cols)]
            cov[a * p : (a + 1) * p, c * p : (c + 1) * p] = block
    try:
        w = float(b @ np.linalg.solve(cov, b))
    except np.linalg.LinAlgError as exc:
        raise SingularDesign("restriction covariance is singular") from exc
    q = b.size
    df2 = k * (fit.nobs - ncols)
    f_stat = w / q
    pval = float(stats.f.sf(f_stat, q, df2))
    return TestReport(label, f_stat, pval, p)


def _stacked_coefs(fit: VarxFit) -> np.ndarray:
    """Per-equation coefficient rows in design-column order."""
    k, p = fit.n_vars, fit.lag_order
    det_cols = 2 if fit.deterministic == "const+trend" else 1
    n_exog = 0 if fit.exog_coeffs is None else fit.exog_coeffs.shape[1]
    ncols = det_cols + p * k + n_exog
    out = np.empty((k, ncols))
    out[:, 0] = fit.const
    if fit.trend is not None:
        out[:, 1] = fit.trend
    for i in range(p):
        out[:, det_cols + i * k : det_cols + (i + 1) * k] = fit.coef_matrices[i]
    if n_exog:
        out[:, det_cols + p * k :] = fit.exog_coeffs
    return out


def granger_causality(fit: VarxFit, cause: str) -> TestReport:
    """Block test that every lag of ``cause`` is zero in all other equations."""
    if cause not in fit.names:
        raise InvalidParameter(f"{cause!r} is not a fitted variable")
    others = [name for name in fit.names if name != cause]
    return _wald_block_test(fit, cause, others, f"granger[{cause}]")


def granger_causality_pairwise(fit: VarxFit, cause: str, caused: str) -> TestReport:
    """Exclusion test of ``cause`` lags in the single ``caused`` equation."""
    if cause not in fit.names or caused not in fit.names:
        raise InvalidParameter("cause and caused must name fitted variables")
    if cause == caused:
        raise InvalidParameter("cause and caused must differ")
    return _wald_block_test(fit, cause, [caused], f"granger[{cause}->{caused}]")


def simulate_var(
    n: int,
    coef_matrices: np.ndarray,
    const: np.ndarray | None = None,
    sigma: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
    burn: int = 200,
) -> np.ndarray:
    """Draw from a Gaussian VAR(p) process, discarding a burn-in stretch."""
    rng = rng if rng is not None else np.random.default_rng()
    A = np.asarray(coef_matrices, dtype=float)
    if A.ndim == 2:
        A = A[None]
    p, k, _ = A.shape
    c = np.zeros(k) if const is None else np.asarray(const, dtype=float)
    cov = np.eye(k) if sigma is None else np.asarray(sigma, dtype=float)
    chol = np.linalg.cholesky(cov)
    total = n + burn
    eps = rng.standard_normal((total, k)) @ chol.T
    out = np.zeros((total, k))
    for t in range(total):
        acc = c + eps[t]
        for i in range(1, min(t, p) + 1):
            acc = acc + A[i - 1] @ out[t - i]
        out[t] = acc
    return out[burn:]
