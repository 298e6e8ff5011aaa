"""Monthly time-series container and the basic transforms built on it.

A :class:`TimeSeries` is an immutable, evenly spaced monthly sequence;
index ``i`` corresponds to ``start`` shifted forward by ``i`` months.
Everything here is a pure function, so concurrent use needs no locking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSeries, InsufficientData, MissingHead

Month = tuple[int, int]


def parse_month(text: str) -> Month:
    """Parse ``YYYY-MM`` or ``YYYY-MM-DD`` into a (year, month) pair."""
    parts = text.strip().split("-")
    if len(parts) < 2:
        raise ValueError(f"cannot parse month from {text!r}")
    year, month = int(parts[0]), int(parts[1])
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range in {text!r}")
    return year, month


def month_add(month: Month, k: int) -> Month:
    """Shift a (year, month) pair by k months (k may be negative)."""
    y, m = month
    total = y * 12 + (m - 1) + k
    return total // 12, total % 12 + 1


def month_diff(later: Month, earlier: Month) -> int:
    """Number of months from ``earlier`` to ``later``."""
    return (later[0] - earlier[0]) * 12 + (later[1] - earlier[1])


def format_month(month: Month) -> str:
    return f"{month[0]:04d}-{month[1]:02d}"


def _freeze(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Named monthly series of finite real observations."""

    name: str
    start: Month
    values: np.ndarray

    def __post_init__(self):
        arr = _freeze(self.values)
        if arr.ndim != 1 or arr.size < 1:
            raise InsufficientData(f"series {self.name!r} must hold at least one value")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"series {self.name!r} contains non-finite values")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "start", (int(self.start[0]), int(self.start[1])))

    def __len__(self) -> int:
        return self.values.size

    def month(self, i: int) -> Month:
        return month_add(self.start, i)

    def months(self) -> list[str]:
        return [format_month(self.month(i)) for i in range(len(self))]

    def with_values(self, values, name: str | None = None) -> "TimeSeries":
        return TimeSeries(name if name is not None else self.name, self.start, values)


@dataclass(frozen=True)
class DiffSeries:
    """A series differenced ``order`` times.

    ``head`` holds the one leading value dropped at each differencing
    round, which is what numeric re-integration needs.  When the series
    came out of :func:`difference`, ``base`` keeps the original so the
    round trip is exact; a hand-built DiffSeries may leave it ``None``.
    """

    name: str
    start: Month
    order: int
    values: np.ndarray
    head: np.ndarray | None = None
    base: TimeSeries | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(self.values))
        if self.head is not None:
            head = _freeze(self.head)
            if head.size != self.order:
                raise MissingHead(
                    f"head must hold {self.order} values, got {head.size}"
                )
            object.__setattr__(self, "head", head)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class CorrelogramResult:
    """Autocorrelations (or partials) at lags 1..L with a white-noise band."""

    kind: str
    lags: np.ndarray
    coefficients: np.ndarray
    confidence_bound: float

    def __post_init__(self):
        object.__setattr__(self, "lags", _freeze(self.lags))
        object.__setattr__(self, "coefficients", _freeze(self.coefficients))


@dataclass(frozen=True)
class ForecastPath:
    """Ordered future predictions; ``start`` labels the first horizon month."""

    name: str
    start: Month
    values: np.ndarray
    variance: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(self.values))
        if self.variance is not None:
            object.__setattr__(self, "variance", _freeze(self.variance))

    def __len__(self) -> int:
        return self.values.size

    def months(self) -> list[str]:
        return [format_month(month_add(self.start, i)) for i in range(len(self))]

    def band(self, z: float = 1.96) -> tuple[np.ndarray, np.ndarray]:
        """Symmetric normal prediction band; requires a variance path."""
        if self.variance is None:
            raise MissingHead("forecast path carries no variance")
        half = z * np.sqrt(self.variance)
        return self.values - half, self.values + half


@dataclass(frozen=True)
class ScaleParams:
    """Inverse-mapping parameters for min-max scaling."""

    minimum: float
    maximum: float

    def inverse(self, scaled) -> np.ndarray:
        return np.asarray(scaled, dtype=float) * (self.maximum - self.minimum) + self.minimum


def difference(series: TimeSeries, d: int) -> DiffSeries:
    """Apply the first-difference operator ``d`` times.

    The value dropped at each round is recorded so the result can be
    integrated back; the original series is kept alongside, making the
    round trip exact.
    """
    if d < 0:
        raise ValueError("difference order must be non-negative")
    if d >= len(series):
        raise InsufficientData(
            f"cannot difference length {len(series)} series {d} times"
        )
    work = series.values
    head = np.empty(d)
    for j in range(d):
        head[j] = work[0]
        work = np.diff(work)
    return DiffSeries(
        name=series.name,
        start=month_add(series.start, d),
        order=d,
        values=work,
        head=head,
        base=series,
    )


def integrate(diff: DiffSeries) -> TimeSeries:
    """Invert :func:`difference`.

    Returns the stored base series when the differenced values are
    untouched (bit-exact round trip); otherwise reconstructs numerically
    from ``head`` by cumulative summation.
    """
    if diff.order == 0:
        if diff.base is not None:
            return diff.base
        return TimeSeries(diff.name, diff.start, diff.values)
    if diff.base is not None and len(diff.base) == len(diff) + diff.order:
        check = diff.base.values
        for _ in range(diff.order):
            check = np.diff(check)
        if check.shape == diff.values.shape and np.array_equal(check, diff.values):
            return diff.base
    if diff.head is None:
        raise MissingHead("cannot integrate: no head values stored")
    work = diff.values
    for j in range(diff.order - 1, -1, -1):
        work = np.concatenate(([diff.head[j]], diff.head[j] + np.cumsum(work)))
    return TimeSeries(diff.name, month_add(diff.start, -diff.order), work)


def sample_acf(values: np.ndarray, max_lag: int) -> np.ndarray:
    """Sample autocorrelations at lags 0..max_lag.

    The denominator is the lag-0 autocovariance with divisor n (biased
    convention), which keeps every coefficient in [-1, 1].
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    if max_lag >= n:
        raise InsufficientData("max_lag must be below the series length")
    centered = x - x.mean()
    c0 = float(centered @ centered) / n
    if c0 <= 0.0:
        raise DegenerateSeries("zero-variance series has no correlogram")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = float(centered[k:] @ centered[:-k]) / n / c0
    return out


def pacf_durbin_levinson(acf: np.ndarray) -> np.ndarray:
    """Partial autocorrelations from an ACF sequence starting at lag 0."""
    max_lag = acf.size - 1
    pacf = np.empty(max_lag)
    phi_prev = np.empty(0)
    for k in range(1, max_lag + 1):
        if k == 1:
            phi_kk = acf[1]
            phi = np.array([phi_kk])
        else:
            num = acf[k] - float(phi_prev @ acf[k - 1:0:-1])
            den = 1.0 - float(phi_prev @ acf[1:k])
            phi_kk = num / den
            phi = np.empty(k)
            phi[:-1] = phi_prev - phi_kk * phi_prev[::-1]
            phi[-1] = phi_kk
        pacf[k - 1] = phi_kk
        phi_prev = phi
    return pacf


def acf_pacf(series: TimeSeries, max_lag: int, kind: str = "acf") -> CorrelogramResult:
    """Correlogram of a series at lags 1..max_lag.

    ``kind`` selects plain autocorrelations or partials via the
    Durbin-Levinson recursion; the confidence bound is the usual
    1.96/sqrt(n) white-noise band.
    """
    if kind not in ("acf", "pacf"):
        raise ValueError(f"kind must be 'acf' or 'pacf', got {kind!r}")
    if max_lag < 1:
        raise ValueError("max_lag must be at least 1")
    if len(series) <= max_lag:
        raise InsufficientData("series must be longer than max_lag")
    rho = sample_acf(series.values, max_lag)
    coeff = rho[1:] if kind == "acf" else pacf_durbin_levinson(rho)
    return CorrelogramResult(
        kind=kind,
        lags=np.arange(1, max_lag + 1, dtype=float),
        coefficients=coeff,
        confidence_bound=1.96 / math.sqrt(len(series)),
    )


def minmax_scale(series: TimeSeries) -> tuple[TimeSeries, ScaleParams]:
    """Map a series affinely onto [0, 1]; returns the inverse parameters."""
    lo = float(series.values.min())
    hi = float(series.values.max())
    if hi <= lo:
        raise DegenerateSeries(f"constant series {series.name!r} cannot be scaled")
    scaled = (series.values - lo) / (hi - lo)
    return series.with_values(scaled), ScaleParams(lo, hi)


def chrono_split(data, train_fraction: float):
    """Split a series or table chronologically; train gets ceil(fraction*n) rows."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    if isinstance(data, TimeSeries):
        n = len(data)
    else:
        data = np.asarray(data, dtype=float)
        n = data.shape[0]
    cut = math.ceil(train_fraction * n)
    if cut <= 0 or cut >= n:
        raise InsufficientData(f"split of {n} rows at {train_fraction} empties a side")
    if isinstance(data, TimeSeries):
        train = TimeSeries(data.name, data.start, data.values[:cut])
        test = TimeSeries(data.name, data.month(cut), data.values[cut:])
        return train, test
    return data[:cut], data[cut:]
