import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from housecast.errors import DegenerateSeries, InsufficientData, MissingHead
from housecast.series import (
    DiffSeries,
    TimeSeries,
    acf_pacf,
    chrono_split,
    difference,
    integrate,
    minmax_scale,
    month_add,
    sample_acf,
)


def ts(values, name="x", start=(2000, 1)):
    return TimeSeries(name, start, values)


class TestDifference:
    def test_first_difference(self):
        d = difference(ts([1, 3, 6, 10]), 1)
        assert np.array_equal(d.values, [2, 3, 4])
        assert d.start == (2000, 2)

    def test_constant_series_zeros(self):
        d = difference(ts([5.0] * 10), 1)
        assert np.all(d.values == 0.0)

    def test_second_difference_by_hand(self):
        # d=1 twice: [1,3,6,10] -> [2,3,4] -> [1,1]
        d = difference(ts([1, 3, 6, 10]), 2)
        assert np.array_equal(d.values, [1, 1])

    def test_order_too_large(self):
        with pytest.raises(InsufficientData):
            difference(ts([1, 2, 3]), 3)


class TestIntegrate:
    def test_round_trip(self):
        s = ts([1, 3, 6, 10])
        assert np.array_equal(integrate(difference(s, 1)).values, s.values)

    def test_round_trip_d2(self):
        s = ts([1, 3, 6, 10])
        back = integrate(difference(s, 2))
        assert np.array_equal(back.values, s.values)
        assert back.start == s.start

    def test_head_only_reconstruction(self):
        d = DiffSeries(name="z", start=(2000, 2), order=1, values=np.zeros(5), head=[5.0])
        assert np.array_equal(integrate(d).values, [5.0] * 6)

    def test_missing_head(self):
        d = DiffSeries(name="z", start=(2000, 2), order=1, values=np.ones(4))
        with pytest.raises(MissingHead):
            integrate(d)

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
            min_size=5,
            max_size=60,
        ),
        st.integers(min_value=1, max_value=3),
    )
    def test_round_trip_property(self, values, d):
        s = ts(values)
        assert np.array_equal(integrate(difference(s, d)).values, s.values)


class TestCorrelogram:
    def test_acf_lag1_brute_force(self):
        # sum (x_t - xbar)(x_{t+1} - xbar) / sum (x_t - xbar)^2 = 4/10
        r = acf_pacf(ts([1, 2, 3, 4, 5]), 2, "acf")
        assert r.coefficients[0] == pytest.approx(0.4, abs=1e-12)

    def test_acf_lag0_is_one(self):
        rho = sample_acf(np.random.default_rng(0).normal(size=50), 5)
        assert rho[0] == 1.0

    def test_pacf_lag1_equals_acf_lag1(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            s = ts(rng.normal(size=80))
            acf = acf_pacf(s, 6, "acf")
            pacf = acf_pacf(s, 6, "pacf")
            assert pacf.coefficients[0] == pytest.approx(acf.coefficients[0], abs=1e-12)

    def test_acf_matches_double_loop(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=120)
        mine = sample_acf(x, 10)
        xbar = x.mean()
        c0 = sum((v - xbar) ** 2 for v in x) / x.size
        for k in range(11):
            ck = sum(
                (x[t] - xbar) * (x[t + k] - xbar) for t in range(x.size - k)
            ) / x.size
            assert mine[k] == pytest.approx(ck / c0, abs=1e-12)

    def test_acf_bounded(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            rho = sample_acf(rng.normal(size=60), 12)
            assert np.all(np.abs(rho) <= 1.0 + 1e-12)

    def test_pacf_ar2_band_coverage(self):
        # beyond the true order, partials should sit inside the band ~95% of
        # the time; require 90% over all (run, lag) pairs
        from housecast.arima import simulate_arma

        inside = total = 0
        for seed in range(20):
            x = simulate_arma(2000, ar=(0.5, 0.3), rng=np.random.default_rng(seed))
            r = acf_pacf(ts(x), 10, "pacf")
            for lag in range(2, 10):
                total += 1
                inside += abs(r.coefficients[lag]) <= r.confidence_bound
        assert inside / total >= 0.9

    def test_degenerate(self):
        with pytest.raises(DegenerateSeries):
            acf_pacf(ts([2.0] * 30), 3)


class TestMinMax:
    def test_basic(self):
        scaled, params = minmax_scale(ts([0, 5, 10]))
        assert np.array_equal(scaled.values, [0, 0.5, 1])
        assert params.minimum == 0 and params.maximum == 10

    def test_thirds(self):
        scaled, _ = minmax_scale(ts([2, 4, 8]))
        assert np.allclose(scaled.values, [0, 1 / 3, 1], atol=1e-15)

    def test_bounds_and_inverse(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            v = rng.normal(size=30) * rng.uniform(0.1, 100)
            scaled, params = minmax_scale(ts(v))
            assert scaled.values.min() == 0.0
            assert scaled.values.max() == 1.0
            assert np.allclose(params.inverse(scaled.values), v, atol=1e-12 * max(1, np.abs(v).max()))

    def test_constant_rejected(self):
        with pytest.raises(DegenerateSeries):
            minmax_scale(ts([3.0, 3.0, 3.0]))


class TestChronoSplit:
    def test_ten_rows(self):
        train, test = chrono_split(np.arange(10.0), 0.8)
        assert train.size == 8 and test.size == 2

    def test_ceiling_rule(self):
        train, test = chrono_split(np.arange(511.0), 0.8)
        assert train.size == 409 and test.size == 102

    def test_two_rows(self):
        train, test = chrono_split(np.arange(2.0), 0.5)
        assert train.size == 1 and test.size == 1

    def test_series_split_keeps_calendar(self):
        s = ts(np.arange(10.0))
        train, test = chrono_split(s, 0.8)
        assert test.start == month_add(s.start, 8)
        assert np.array_equal(np.concatenate([train.values, test.values]), s.values)

    def test_empty_partition(self):
        with pytest.raises(InsufficientData):
            chrono_split(np.arange(3.0), 0.99)
