import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from learncurve.fitting import (
    CollinearityError,
    DegenerateDesignError,
    FitError,
    InsufficientDataError,
    ObservationSeries,
    bootstrap_ci,
    fit,
    read_series,
)


def noisy_series(seed=0, n=25, lr=0.2, sigma=0.05):
    rng = np.random.default_rng(seed)
    x = np.cumsum(rng.uniform(1, 10, n))
    cost = 500.0 * (x / x[0]) ** math.log2(1 - lr) * np.exp(rng.normal(0, sigma, n))
    return ObservationSeries.from_arrays(x, cost)


@given(st.floats(-0.3, 0.6), st.floats(1.0, 1e4), st.integers(3, 30))
def test_exact_power_law_is_recovered(lr, c0, n):
    x = np.geomspace(5.0, 5.0 * 2 ** (n / 2), n)
    series = ObservationSeries.from_arrays(x, c0 * (x / 5.0) ** math.log2(1 - lr))
    res = fit(series)
    assert res.lr_hat == pytest.approx(lr, abs=1e-9)
    assert res.c0_hat == pytest.approx(c0, rel=1e-9)
    if abs(lr) > 0.01:
        # a nearly flat response leaves r^2 ill-conditioned
        assert res.r_squared == pytest.approx(1.0, abs=1e-12)
    assert res.x0 == 5.0


def test_matches_scipy_linregress():
    series = noisy_series(3)
    res = fit(series, level=0.9)
    ref = stats.linregress(np.log(series.x / series.x[0]), np.log(series.cost))
    assert res.b_hat == pytest.approx(ref.slope, rel=1e-10)
    assert res.stderr["b"] == pytest.approx(ref.stderr, rel=1e-8)
    assert res.stderr["ln_c0"] == pytest.approx(ref.intercept_stderr, rel=1e-8)
    assert res.r_squared == pytest.approx(ref.rvalue**2, rel=1e-10)
    t = stats.t.ppf(0.95, len(series) - 2)
    lo, hi = res.lr_ci
    assert lo == pytest.approx(1 - 2 ** (ref.slope + t * ref.stderr), rel=1e-9)
    assert hi == pytest.approx(1 - 2 ** (ref.slope - t * ref.stderr), rel=1e-9)


def test_interval_covers_true_rate_most_of_the_time():
    hits = sum(fit(noisy_series(s)).lr_ci[0] <= 0.2 <= fit(noisy_series(s)).lr_ci[1] for s in range(200))
    # nominal 95 %; binomial spread over 200 trials
    assert 180 <= hits <= 199


def test_three_points_needed():
    with pytest.raises(InsufficientDataError):
        fit(ObservationSeries.from_arrays([1.0, 2.0], [10.0, 8.0]))


def test_three_point_fit_has_an_interval():
    res = fit(ObservationSeries.from_arrays([1.0, 2.0, 4.0], [10.0, 8.0, 6.4]))
    assert res.lr_hat == pytest.approx(0.2)
    assert all(math.isfinite(v) for v in res.lr_ci)


@pytest.mark.parametrize("bad", [([1.0, 1.0, 2.0], [3.0, 2.0, 1.0]), ([1.0, 2.0, 3.0], [1.0, -1.0, 1.0]), ([3.0, 2.0, 1.0], [1.0, 1.0, 1.0])])
def test_series_validation(bad):
    with pytest.raises(FitError):
        ObservationSeries.from_arrays(*bad)


def test_degenerate_design():
    series = ObservationSeries.from_arrays([1.0, 1.0 + 1e-15, 1.0 + 2e-15], [1.0, 2.0, 3.0])
    with pytest.raises(DegenerateDesignError):
        fit(series)


def test_two_factor_recovers_both_rates():
    rng = np.random.default_rng(5)
    x = np.cumsum(rng.uniform(1, 5, 30))
    y = np.cumsum(rng.uniform(1, 5, 30))
    cost = 100 * (x / x[0]) ** math.log2(0.8) * (y / y[0]) ** math.log2(0.9)
    res = fit(ObservationSeries.from_arrays(x, cost, y), model="two")
    assert res.lr_hat == pytest.approx(0.2, abs=1e-9)
    assert res.lbr_hat == pytest.approx(0.1, abs=1e-9)
    assert res.to_dict()["lbr_hat"] == res.lbr_hat


def test_two_factor_collinear_inputs():
    x = np.geomspace(1, 100, 10)
    with pytest.raises(CollinearityError):
        fit(ObservationSeries.from_arrays(x, 100 * x**-0.3, 3 * x), model="two")
    with pytest.raises(CollinearityError):
        fit(ObservationSeries.from_arrays(x, 100 * x**-0.3, np.full(10, 2.0)), model="two")


def test_two_factor_needs_y():
    with pytest.raises(FitError):
        fit(noisy_series(), model="two")


def test_unknown_model():
    with pytest.raises(ValueError):
        fit(noisy_series(), model="three")


def test_bootstrap_is_seeded_and_brackets_estimate():
    series = noisy_series(9)
    a = bootstrap_ci(series, resamples=400, seed=12)
    b = bootstrap_ci(series, resamples=400, seed=12)
    assert a == b
    assert a.low < fit(series).lr_hat < a.high
    assert bootstrap_ci(series, resamples=400, seed=13) != a


def test_bootstrap_percentiles_follow_numpy():
    # independent resampling loop with the same generator stream
    series = noisy_series(2, n=12)
    got = bootstrap_ci(series, resamples=300, seed=4)
    idx = np.random.default_rng(4).integers(0, 12, size=(300, 12))
    lx, lc = np.log(series.x / series.x[0]), np.log(series.cost)
    rates = []
    for row in idx:
        if np.ptp(lx[row]) == 0:
            continue
        slope = np.polyfit(lx[row], lc[row], 1)[0]
        rates.append(1 - 2**slope)
    lo, hi = np.quantile(rates, [0.025, 0.975])
    assert got.low == pytest.approx(lo, rel=1e-9)
    assert got.high == pytest.approx(hi, rel=1e-9)


def test_bootstrap_minimum_resamples():
    with pytest.raises(ValueError):
        bootstrap_ci(noisy_series(), resamples=100)


def test_read_series(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("x,cost\n1,10\n2,8\n4,6.4\n")
    series = read_series(p)
    assert list(series.x) == [1.0, 2.0, 4.0]
    p.write_text("x;cost;y\n1;10;1\n2;8;2\n")
    assert list(read_series(p).y) == [1.0, 2.0]
    p.write_text("a,b\n1,2\n")
    with pytest.raises(FitError):
        read_series(p)
    p.write_text("x,cost\n1,ten\n")
    with pytest.raises(FitError, match=":2:"):
        read_series(p)
