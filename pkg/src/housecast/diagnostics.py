"""Hypothesis tests for unit roots, serial correlation, ARCH effects and normality.

Every test returns a :class:`TestReport`; the 5 percent decision is derived
from the p-value so the two can never disagree.  All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ._ols import ols_fit
from .errors import DegenerateSeries, InsufficientData, InvalidDof, SingularDesign
from .series import TimeSeries, difference, sample_acf


@dataclass(frozen=True)
class TestReport:
    """Outcome of one named hypothesis test."""

    test_name: str
    statistic: float
    p_value: float
    lags_or_order: int
    reject_at_5pct: bool = field(init=False)

    def __post_init__(self):
        p = float(self.p_value)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-value {p} outside [0, 1]")
        object.__setattr__(self, "reject_at_5pct", p < 0.05)

    def __str__(self) -> str:
        verdict = "reject at 5%" if self.reject_at_5pct else "no rejection at 5%"
        return (
            f"{self.test_name}: stat={self.statistic:.6g} "
            f"p={self.p_value:.6g} (lags/order={self.lags_or_order}) -> {verdict}"
        )


# Dickey-Fuller t critical values as response surfaces in the regression
# sample size: cv = b0 + b1/T + b2/T^2 + b3/T^3, per deterministic case,
# at the 1 / 5 / 10 percent levels (MacKinnon-style constants).
_ADF_SURFACES = {
    "none": {
        0.01: (-2.56574, -2.2358, -3.627, 0.0),
        0.05: (-1.94100, -0.2686, -3.365, 31.223),
        0.10: (-1.61682, 0.2656, -2.714, 25.364),
    },
    "drift": {
        0.01: (-3.43035, -6.5393, -16.786, -79.433),
        0.05: (-2.86154, -2.8903, -4.234, -40.040),
        0.10: (-2.56677, -1.5384, -2.809, 0.0),
    },
    "trend": {
        0.01: (-3.95877, -9.0531, -28.428, -134.155),
        0.05: (-3.41049, -4.3904, -9.036, -45.374),
        0.10: (-3.12705, -2.5856, -3.925, -22.380),
    },
}

# Residual-based cointegration test on a bivariate static regression with
# intercept: the estimated relation shifts the null distribution, so the
# plain surfaces above would badly over-reject.
_COINT_SURFACE = {
    0.01: (-3.89644, -10.9519, -22.527, 0.0),
    0.05: (-3.33613, -6.1101, -6.823, 0.0),
    0.10: (-3.04445, -4.2412, -2.720, 0.0),
}


def _surface_cv(table: dict, nobs: int) -> dict[float, float]:
    t = float(nobs)
    return {
        level: b0 + b1 / t + b2 / t**2 + b3 / t**3
        for level, (b0, b1, b2, b3) in table.items()
    }


def interpolate_pvalue(stat: float, cv: dict[float, float]) -> float:
    """Piecewise-linear p-value from three (level, critical value) anchors.

    Linear in statistic space between the 1/5/10 percent anchors, continued
    with the adjacent slope beyond them, clamped to [0.001, 0.999].
    """
    anchors = sorted(cv.items(), key=lambda kv: kv[1])  # by critical value
    xs = [v for _, v in anchors]
    ps = [lvl for lvl, _ in anchors]
    if stat <= xs[0]:
        slope = (ps[1] - ps[0]) / (xs[1] - xs[0])
        p = ps[0] + slope * (stat - xs[0])
    elif stat >= xs[-1]:
        slope = (ps[-1] - ps[-2]) / (xs[-1] - xs[-2])
        p = ps[-1] + slope * (stat - xs[-1])
    else:
        for i in range(len(xs) - 1):
            if xs[i] <= stat <= xs[i + 1]:
                frac = (stat - xs[i]) / (xs[i + 1] - xs[i])
                p = ps[i] + frac * (ps[i + 1] - ps[i])
                break
    return float(min(max(p, 0.001), 0.999))


def default_adf_lag(n: int) -> int:
    """Schwert-style lag cap used when no maximum is supplied."""
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def _adf_design(values: np.ndarray, k: int, deterministic: str, offset: int):
    """Build the ADF regression pieces for lag order k, skipping ``offset`` rows."""
    dy = np.diff(values)
    rows = np.arange(offset, dy.size)
    target = dy[rows]
    cols = [values[rows]]  # lagged level, coefficient under test
    for j in range(1, k + 1):
        cols.append(dy[rows - j])
    if deterministic in ("drift", "trend"):
        cols.append(np.ones(rows.size))
    if deterministic == "trend":
        cols.append(rows.astype(float) + 1.0)
    return target, np.column_stack(cols)


def adf_test(
    series: TimeSeries | np.ndarray,
    max_lag: int | None = None,
    deterministic: str = "drift",
    critical_surface: dict | None = None,
    test_name: str = "adf",
) -> TestReport:
    """Augmented Dickey-Fuller unit-root test.

    Regresses the first difference on the lagged level, ``k`` lagged
    differences and the chosen deterministic terms; the statistic is the
    t-ratio on the lagged level.  The lag order is chosen by AIC over
    0..max_lag on a common sample, then the reported regression is refit
    on the full usable sample.  P-values come from embedded critical-value
    surfaces interpolated in statistic space.
    """
    if deterministic not in ("none", "drift", "trend"):
        raise ValueError(f"unknown deterministic spec {deterministic!r}")
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series, float)
    n = values.size
    if max_lag is None:
        max_lag = default_adf_lag(n)
    if n < max_lag + 10:
        raise InsufficientData(f"need at least max_lag+10={max_lag + 10} obs, have {n}")

    best_k, best_aic = 0, np.inf
    for k in range(max_lag + 1):
        y, X = _adf_design(values, k, deterministic, offset=max_lag)
        fit = ols_fit(y, X)
        nobs = y.size
        aic = nobs * math.log(fit.rss / nobs) + 2 * X.shape[1]
        if aic < best_aic - 1e-12:
            best_aic, best_k = aic, k

    y, X = _adf_design(values, best_k, deterministic, offset=best_k)
    fit = ols_fit(y, X)
    stat = float(fit.tvalues[0])
    table = critical_surface if critical_surface is not None else _ADF_SURFACES[deterministic]
    pval = interpolate_pvalue(stat, _surface_cv(table, y.size))
    return TestReport(test_name, stat, pval, best_k)


def ljung_box(residuals, lags: int, fitted_params: int = 0) -> TestReport:
    """Ljung-Box portmanteau test for serial correlation up to ``lags``.

    Degrees of freedom are reduced by ``fitted_params`` when the input is
    the residual of an estimated ARMA-type model.
    """
    if lags <= fitted_params:
        raise InvalidDof(f"lags={lags} must exceed fitted_params={fitted_params}")
    x = np.asarray(residuals, dtype=float)
    n = x.size
    if n <= lags:
        raise InsufficientData("need more observations than lags")
    rho = sample_acf(x, lags)[1:]
    k = np.arange(1, lags + 1)
    q = float(n * (n + 2) * np.sum(rho**2 / (n - k)))
    pval = float(stats.chi2.sf(q, lags - fitted_params))
    return TestReport("ljung-box", q, pval, lags)


def arch_lm(residuals, q: int) -> TestReport:
    """Engle's LM test for ARCH effects: regress squared residuals on q lags."""
    x = np.asarray(residuals, dtype=float)
    n = x.size
    if n <= q + 10:
        raise InsufficientData(f"need more than q+10={q + 10} observations, have {n}")
    sq = x**2
    y = sq[q:]
    cols = [np.ones(y.size)]
    for j in range(1, q + 1):
        cols.append(sq[q - j : n - j])
    X = np.column_stack(cols)
    fit = ols_fit(y, X)
    tss = float(np.sum((y - y.mean()) ** 2))
    if tss <= 0.0:
        raise SingularDesign("squared residuals are constant; R^2 undefined")
    r2 = 1.0 - fit.rss / tss
    stat = y.size * r2
    pval = float(stats.chi2.sf(stat, q))
    return TestReport("arch-lm", stat, pval, q)


def jarque_bera(residuals) -> TestReport:
    """Jarque-Bera normality test from sample skewness and kurtosis."""
    x = np.asarray(residuals, dtype=float)
    n = x.size
    if n < 8:
        raise InsufficientData("Jarque-Bera needs at least 8 observations")
    centered = x - x.mean()
    m2 = float(np.mean(centered**2))
    if m2 <= 0.0:
        raise DegenerateSeries("zero-variance input")
    skew = float(np.mean(centered**3)) / m2**1.5
    kurt = float(np.mean(centered**4)) / m2**2
    jb = n / 6.0 * (skew**2 + (kurt - 3.0) ** 2 / 4.0)
    pval = float(stats.chi2.sf(jb, 2))
    return TestReport("jarque-bera", jb, pval, 2)


def select_differencing_order(
    series: TimeSeries,
    max_rounds: int = 3,
    deterministic: str = "drift",
    max_lag: int | None = None,
) -> tuple[int, list[TestReport]]:
    """Difference until the ADF test rejects, up to ``max_rounds`` rounds.

    Returns the order found and the ADF report from each round (the first
    report is the test on the untouched series).
    """
    reports = []
    current = series
    for d in range(max_rounds + 1):
        report = adf_test(current, max_lag=max_lag, deterministic=deterministic)
        reports.append(report)
        if report.reject_at_5pct or d == max_rounds:
            return d, reports
        diffed = difference(current, 1)
        current = TimeSeries(current.name, diffed.start, diffed.values)
    return max_rounds, reports
