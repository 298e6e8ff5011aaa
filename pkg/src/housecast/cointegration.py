"""Cointegration tooling: two-step residual test, trace test, and VECM.

The residual-based two-step test regresses one level series on another and
checks the residuals for a unit root; its critical values differ from the
plain Dickey-Fuller ones because the relation is estimated.  The trace
test runs a reduced-rank regression on k level series, and the VECM
estimates short-run dynamics around the cointegrating relations it finds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import stats

from ._ols import ols_fit
from .diagnostics import _COINT_SURFACE, TestReport, adf_test
from .errors import (
    InsufficientData,
    InvalidParameter,
    InvalidRank,
    NoCointegration,
    ShapeMismatch,
    SingularDesign,
)
from .series import Month, TimeSeries

# Trace-statistic critical values at 10/5/1 percent, indexed by the number
# of remaining relations (k - r), for systems with an unrestricted constant
# and, separately, with a linear trend (Osterwald-Lenum style constants).
_TRACE_CRIT = {
    "constant": {
        1: (6.50, 8.18, 11.65),
        2: (15.66, 17.95, 23.52),
        3: (28.71, 31.52, 37.22),
        4: (45.23, 48.28, 55.43),
        5: (66.49, 70.60, 78.87),
        # The widely reprinted six-variable row is non-monotone in its
        # spacing and fails a direct simulation check; these values follow
        # the MacKinnon-Haug-Michelis surfaces instead.
        6: (91.11, 95.75, 104.96),
    },
    "trend": {
        1: (10.49, 12.25, 16.26),
        2: (22.76, 25.32, 30.45),
        3: (39.06, 42.44, 48.45),
        4: (59.14, 62.99, 70.05),
        5: (83.20, 87.31, 96.58),
        6: (110.42, 114.90, 124.75),
    },
}


@dataclass(frozen=True)
class EngleGrangerResult:
    """Static regression of y on x with a unit-root check on its residuals."""

    intercept: float
    slope: float
    residuals: np.ndarray
    residual_ar1: float
    adf_on_residuals: TestReport

    @property
    def cointegrated(self) -> bool:
        return self.adf_on_residuals.reject_at_5pct


@dataclass(frozen=True)
class EcmFit:
    """Short-run error-correction regression on differenced data."""

    alpha: float
    gamma: np.ndarray
    residuals: np.ndarray
    alpha_stderr: float


@dataclass(frozen=True)
class JohansenResult:
    """Trace-test output: eigenstructure, statistics, and selected rank."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, leading element normalized to 1
    trace_stats: np.ndarray
    critical_values: np.ndarray  # rows r=0..k-1, columns 10/5/1 percent
    selected_rank: int
    names: tuple[str, ...] = ()
    start: Month = (1900, 1)


@dataclass(frozen=True)
class VecmFit:
    """Per-equation least-squares VECM around fixed cointegrating vectors."""

    rank: int
    lags: int
    names: tuple[str, ...]
    beta: np.ndarray  # k x rank cointegrating vectors
    ect_coefficients: np.ndarray  # k equations x rank
    ect_stderr: np.ndarray
    ect_pvalues: np.ndarray
    gamma: np.ndarray  # lags x k x k short-run matrices
    intercepts: np.ndarray
    residuals: np.ndarray = field(repr=False)
    residual_cov: np.ndarray = field(repr=False)


def engle_granger(
    y: TimeSeries, x: TimeSeries, ecm_extra_lags: int = 0
) -> tuple[EngleGrangerResult, EcmFit]:
    """Two-step cointegration test plus the matching error-correction model.

    Step one regresses the levels of y on x with an intercept and tests
    the residuals for a unit root (no deterministic terms in the test
    regression; critical values adjusted for the estimated relation).
    Step two regresses the change in y on the lagged residual and the
    change in x; ``ecm_extra_lags`` adds that many lags of both changes.
    """
    if len(y) != len(x):
        raise ShapeMismatch("series must be aligned to equal lengths")
    if len(y) < 30:
        raise InsufficientData("need at least 30 aligned observations")
    X = np.column_stack([np.ones(len(x)), x.values])
    static = ols_fit(y.values, X)
    resid = static.residuals

    adf = adf_test(
        resid,
        deterministic="none",
        critical_surface=_COINT_SURFACE,
        test_name="engle-granger-adf",
    )
    ar1 = float(ols_fit(resid[1:], resid[:-1][:, None]).beta[0])
    result = EngleGrangerResult(
        intercept=float(static.beta[0]),
        slope=float(static.beta[1]),
        residuals=resid,
        residual_ar1=ar1,
        adf_on_residuals=adf,
    )

    dy = np.diff(y.values)
    dx = np.diff(x.values)
    m = ecm_extra_lags
    rows = slice(m, dy.size)
    cols = [resid[m:-1], dx[rows]]
    for j in range(1, m + 1):
        cols.append(dy[m - j : dy.size - j])
        cols.append(dx[m - j : dx.size - j])
    ecm_ols = ols_fit(dy[rows], np.column_stack(cols))
    ecm = EcmFit(
        alpha=float(ecm_ols.beta[0]),
        gamma=ecm_ols.beta[1:].copy(),
        residuals=ecm_ols.residuals,
        alpha_stderr=float(ecm_ols.stderr[0]),
    )
    return result, ecm


def _rrr_eig(r0: np.ndarray, rk: np.ndarray):
    """Eigenstructure of the reduced-rank regression between two residual sets."""
    t = r0.shape[0]
    s00 = r0.T @ r0 / t
    skk = rk.T @ rk / t
    sk0 = rk.T @ r0 / t
    try:
        l_kk = np.linalg.cholesky(skk)
        s00_inv = np.linalg.inv(s00)
    except np.linalg.LinAlgError as exc:
        raise SingularDesign("moment matrices are rank deficient") from exc
    inner = sk0 @ s00_inv @ sk0.T
    m = scipy.linalg.solve_triangular(l_kk, inner, lower=True)
    m = scipy.linalg.solve_triangular(l_kk, m.T, lower=True).T
    m = 0.5 * (m + m.T)
    eigvals, w = np.linalg.eigh(m)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, 1.0 - 1e-12)
    vectors = scipy.linalg.solve_triangular(l_kk, w[:, order], lower=True, trans="T")
    return eigvals, vectors


def _residualize(y: np.ndarray, X: np.ndarray | None) -> np.ndarray:
    if X is None or X.size == 0:
        return y
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    return y - X @ beta


def johansen_trace(
    table: np.ndarray,
    lags: int = 2,
    deterministic: str = "constant",
    names: tuple[str, ...] = (),
    start: Month = (1900, 1),
) -> JohansenResult:
    """Trace test for the cointegration rank of k level series.

    ``lags`` is the order of the levels VAR: the auxiliary regressions use
    lags-1 lagged differences and the level term enters at t-lags.  The
    rank is the first r whose trace statistic stays below the embedded
    5 percent critical value.
    """
    Y = np.asarray(table, dtype=float)
    if Y.ndim != 2:
        raise ShapeMismatch("table must be two-dimensional")
    n, k = Y.shape
    if not 2 <= k <= 6:
        raise InvalidParameter("trace test supports 2 to 6 variables")
    if lags < 1:
        raise InvalidParameter("lags must be at least 1")
    if n < 25 * k:
        raise InsufficientData(f"need at least {25 * k} rows for {k} variables")
    if deterministic not in _TRACE_CRIT:
        raise ValueError(f"unknown deterministic spec {deterministic!r}")

    dY = np.diff(Y, axis=0)
    rows = np.arange(lags, n)  # level-index equations
    z0 = dY[rows - 1]
    zk = Y[rows - lags]
    blocks = [dY[rows - 1 - j] for j in range(1, lags)]
    blocks.append(np.ones((rows.size, 1)))
    if deterministic == "trend":
        blocks.append(rows[:, None].astype(float))
    z1 = np.hstack(blocks)

    r0 = _residualize(z0, z1)
    rk = _residualize(zk, z1)
    eigvals, vectors = _rrr_eig(r0, rk)

    t_eff = rows.size
    log_terms = np.log(1.0 - eigvals)
    trace = -t_eff * np.cumsum(log_terms[::-1])[::-1]

    crit = np.array([_TRACE_CRIT[deterministic][k - r] for r in range(k)])
    selected = k
    for r in range(k):
        if trace[r] < crit[r, 1]:
            selected = r
            break

    normalized = vectors.copy()
    for j in range(k):
        lead = normalized[0, j]
        if abs(lead) > 1e-12:
            normalized[:, j] = normalized[:, j] / lead
    return JohansenResult(
        eigenvalues=eigvals,
        eigenvectors=normalized,
        trace_stats=trace,
        critical_values=crit,
        selected_rank=selected,
        names=tuple(names),
        start=start,
    )


def stationary_combination(
    result: JohansenResult, table: np.ndarray, name: str = "stationary_combination"
) -> TimeSeries:
    """Weight the level series by the leading cointegrating vector."""
    if result.selected_rank < 1:
        raise NoCointegration("trace test selected rank zero")
    Y = np.asarray(table, dtype=float)
    weights = result.eigenvectors[:, 0]
    if Y.shape[1] != weights.size:
        raise ShapeMismatch("table column count differs from the tested system")
    return TimeSeries(name, result.start, Y @ weights)


def fit_vecm(
    table: np.ndarray,
    rank: int,
    lags: int,
    names: tuple[str, ...] = (),
    deterministic: str = "constant",
) -> VecmFit:
    """Two-step VECM: trace-test vectors fixed, then per-equation OLS.

    ``lags`` counts the lagged-difference terms included, so the implied
    levels VAR has order lags+1.  Each equation regresses the change at t
    on the error-correction terms at t-1, the lagged differences, and a
    constant; coefficient p-values are standard OLS t-tests.
    """
    Y = np.asarray(table, dtype=float)
    n, k = Y.shape
    if not 1 <= rank <= k - 1:
        raise InvalidRank(f"rank must lie in 1..{k - 1}, got {rank}")
    if lags < 1:
        raise InvalidParameter("lags must be at least 1")
    if not names:
        names = tuple(f"y{i}" for i in range(k))

    joh = johansen_trace(Y, lags=lags + 1, deterministic=deterministic, names=names)
    beta = joh.eigenvectors[:, :rank]

    dY = np.diff(Y, axis=0)
    rows = np.arange(lags + 1, n)
    target = dY[rows - 1]
    ect = Y[rows - 1] @ beta
    blocks = [ect]
    for j in range(1, lags + 1):
        blocks.append(dY[rows - 1 - j])
    blocks.append(np.ones((rows.size, 1)))
    Z = np.hstack(blocks)

    n_coef = Z.shape[1]
    coefs = np.empty((k, n_coef))
    stderr = np.empty((k, n_coef))
    resid = np.empty((rows.size, k))
    df = rows.size - n_coef
    for eq in range(k):
        fit = ols_fit(target[:, eq], Z)
        coefs[eq] = fit.beta
        stderr[eq] = fit.stderr
        resid[:, eq] = fit.residuals
    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = coefs / stderr
    pvals = 2.0 * stats.t.sf(np.abs(tvals), df)

    gamma = np.empty((lags, k, k))
    for j in range(lags):
        gamma[j] = coefs[:, rank + j * k : rank + (j + 1) * k]
    return VecmFit(
        rank=rank,
        lags=lags,
        names=tuple(names),
        beta=beta,
        ect_coefficients=coefs[:, :rank],
        ect_stderr=stderr[:, :rank],
        ect_pvalues=pvals[:, :rank],
        gamma=gamma,
        intercepts=coefs[:, -1],
        residuals=resid,
        residual_cov=resid.T @ resid / df,
    )
