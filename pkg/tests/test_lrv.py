"""Test the autocovariances and the long-run variance estimators."""
import logging

import numpy as np
import pytest

from hetcusum.lrv import (
    LrvConfig,
    autocov_partial,
    floor_lrv,
    kernel_weight,
    lrv_partial,
    lrv_path,
    sample_variance,
)
from hetcusum.series import Series

# ================================================================
#  Fixtures
# ================================================================


@pytest.fixture
def alternating():
    return Series([1.0, -1.0, 1.0, -1.0])


# ================================================================
#  Tests
# ================================================================

# ----------------------------------------------------------------
#  Lag windows
# ----------------------------------------------------------------
@pytest.mark.parametrize(*("u, expected", [
    pytest.param(0.0, 1.0, id="origin"),
    pytest.param(0.5, 0.5, id="half"),
    pytest.param(-0.5, 0.5, id="symmetric"),
    pytest.param(1.2, 0.0, id="outside support"),
]))
def test_bartlett(u, expected):
    assert kernel_weight(LrvConfig(), u) == pytest.approx(expected)


@pytest.mark.parametrize(*("u, expected", [
    pytest.param(0.0, 1.0, id="origin"),
    pytest.param(0.25, 1 - 6 / 16 + 6 / 64, id="inner"),
    pytest.param(0.5, 0.25, id="joint"),
    pytest.param(-0.75, 2 * 0.25**3, id="outer"),
    pytest.param(1.5, 0.0, id="outside support"),
]))
def test_parzen(u, expected):
    assert kernel_weight(LrvConfig("parzen"), u) == pytest.approx(expected)


def test_custom_kernel():
    config = LrvConfig("custom", table=((0.0, 1.0), (1.0, 0.5), (2.0, 0.0)))
    assert config.support == 2.0
    assert config.max_lag == 2
    np.testing.assert_allclose(kernel_weight(config, np.array([0.5, -1.5, 3.0])),
                               [0.75, 0.25, 0.0])


@pytest.mark.parametrize(*("table, msg", [
    pytest.param(None, "at least two", id="missing"),
    pytest.param(((0.0, 0.9), (1.0, 0.0)), "start at", id="K(0) != 1"),
    pytest.param(((0.0, 1.0), (1.0, 0.5), (0.5, 0.0)), "increasing", id="unsorted"),
    pytest.param(((0.0, 1.0), (1.0, -0.1), (2.0, 0.0)), "nonnegative", id="negative"),
    pytest.param(((0.0, 1.0), (1.0, 0.5)), "last weight", id="open support"),
    pytest.param(((0.0, 1.0), (1e-9, 0.0)), "Lipschitz", id="steep"),
]))
def test_custom_kernel_invalid(table, msg):
    with pytest.raises(ValueError, match=msg):
        LrvConfig("custom", table=table)


@pytest.mark.parametrize(*("kwargs, msg", [
    pytest.param({"kernel": "qs"}, "Unknown kernel", id="kernel"),
    pytest.param({"bandwidth": 0.5}, "at least 1", id="bandwidth"),
]))
def test_config_invalid(kwargs, msg):
    with pytest.raises(ValueError, match=msg):
        LrvConfig(**kwargs)


@pytest.mark.parametrize(*("n, bandwidth", [
    pytest.param(8, 2.0, id="8"),
    pytest.param(512, 8.0, id="512"),
    pytest.param(1000, 10.0, id="1000"),
    pytest.param(4, 1.0, id="4"),
]))
def test_default_bandwidth(n, bandwidth):
    assert LrvConfig.for_series(n).bandwidth == bandwidth


# ----------------------------------------------------------------
#  Estimators
# ----------------------------------------------------------------
@pytest.mark.parametrize(*("lag, expected", [
    pytest.param(0, 1.0, id="lag 0"),
    pytest.param(1, -0.75, id="lag 1"),
    pytest.param(-1, -0.75, id="lag -1"),
    pytest.param(3, -0.25, id="lag 3"),
]))
def test_autocov_alternating(alternating, lag, expected):
    assert autocov_partial(alternating, 4, lag) == pytest.approx(expected)


def test_autocov_partial_sample(alternating):
    # X_1..X_2 around the full mean 0, divisor N = 4
    assert autocov_partial(alternating, 2, 0) == pytest.approx(0.5)
    assert autocov_partial(alternating, 2, 1) == pytest.approx(-0.25)


def test_autocov_invalid(alternating):
    with pytest.raises(ValueError, match="1 <= k"):
        autocov_partial(alternating, 5, 0)
    with pytest.raises(ValueError, match="lag"):
        autocov_partial(alternating, 2, 2)


def test_autocov_symmetric_full_sample(rng):
    series = Series(rng.standard_normal(50))
    for lag in range(1, 5):
        assert autocov_partial(series, 50, lag) == autocov_partial(series, 50, -lag)


def test_lrv_alternating(alternating):
    assert lrv_partial(alternating, 4, LrvConfig(bandwidth=2)) == pytest.approx(0.25)
    assert lrv_partial(alternating, 4, LrvConfig(bandwidth=1)) == pytest.approx(1.0)


@pytest.mark.parametrize("config", [
    pytest.param(LrvConfig(bandwidth=3), id="bartlett"),
    pytest.param(LrvConfig("parzen", bandwidth=5), id="parzen"),
    pytest.param(LrvConfig("custom", bandwidth=2,
                           table=((0.0, 1.0), (1.0, 0.6), (1.5, 0.0))), id="custom"),
])
def test_lrv_path_matches_partial(rng, config):
    series = Series(rng.standard_normal(40))
    path = lrv_path(series, config)
    assert path[0] == 0
    expected = [lrv_partial(series, k, config) for k in range(1, 41)]
    np.testing.assert_allclose(path[1:], expected, rtol=1e-10, atol=1e-14)


def test_lrv_constant():
    series = Series([2.0] * 10)
    assert (lrv_path(series, LrvConfig(bandwidth=3)) == 0).all()


def test_sample_variance():
    assert sample_variance(Series([0.0, 0.0, 1.0, 1.0])) == 0.25
    assert sample_variance(Series([3.0] * 4)) == 0
    assert sample_variance(Series([0.0, 0.0, 2.0, 2.0])) == 1.0


def test_floor_lrv(caplog):
    series = Series([0.0, 0.0, 1.0, 1.0])
    values, count = floor_lrv(np.array([0.5, 0.0, -1.0]), series)
    assert count == 2
    np.testing.assert_allclose(values, [0.5, 0.25e-12, 0.25e-12])
    assert "Floored 2" in caplog.text

    value, count = floor_lrv(0.3, series)
    assert value == 0.3
    assert count == 0


@pytest.mark.slow
def test_lrv_iid_close_to_one():
    rng = np.random.default_rng(99)
    n = 4000
    config = LrvConfig.for_series(n)
    values = [lrv_partial(Series(rng.standard_normal(n)), n, config)
              for _ in range(100)]
    assert np.mean(values) == pytest.approx(1.0, rel=0.1)


def test_floor_lrv_logs_nothing_when_positive(caplog):
    caplog.set_level(logging.DEBUG, logger="hetcusum")
    floor_lrv(np.array([1.0, 2.0]), Series([0.0, 1.0, 0.0, 1.0]))
    assert "Floored" not in caplog.text
