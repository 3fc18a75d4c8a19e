"""Test the data-generating processes."""
import math

import numpy as np
import pytest

from hetcusum.dgp import (
    BURN_IN,
    DgpSpec,
    apply_profile,
    garch_centering,
    gen_ar1,
    gen_garch,
    gen_gaussian,
    profile_values,
    variance_profile,
)
from hetcusum.series import MeanSpec, Series

# ================================================================
#  Tests
# ================================================================

# ----------------------------------------------------------------
#  Base processes
# ----------------------------------------------------------------
def test_gaussian_reproducible():
    np.testing.assert_array_equal(gen_gaussian(10, 3).values, gen_gaussian(10, 3).values)
    assert not np.array_equal(gen_gaussian(10, 3).values, gen_gaussian(10, 4).values)


def test_ar1_without_memory():
    rng = np.random.default_rng(5)
    rng.standard_normal()  # stationary start
    expected = rng.standard_normal(50 + BURN_IN)[BURN_IN:]
    np.testing.assert_allclose(gen_ar1(50, 0.0, 5).values, expected)


def test_ar1_moments():
    values = gen_ar1(100_000, 0.5, 1).values
    assert np.var(values) == pytest.approx(4 / 3, rel=0.05)
    lag1 = np.corrcoef(values[:-1], values[1:])[0, 1]
    assert lag1 == pytest.approx(0.5, abs=0.02)


def test_garch_without_dynamics():
    rng = np.random.default_rng(2)
    expected = 1e-3 * rng.standard_normal(40 + BURN_IN)[BURN_IN:]
    np.testing.assert_allclose(gen_garch(40, 1e-6, 0.0, 0.0, 2).values, expected)


def test_garch_variance():
    values = gen_garch(100_000, 1e-6, 0.2, 0.5, 7).values
    assert np.var(values) == pytest.approx(1e-6 / 0.3, rel=0.1)
    assert abs(np.corrcoef(values[:-1], values[1:])[0, 1]) < 0.02


@pytest.mark.parametrize(*("args, msg", [
    pytest.param((0.0, 0.2, 0.5), "omega", id="omega"),
    pytest.param((1e-6, -0.1, 0.5), "nonnegative", id="negative"),
    pytest.param((1e-6, 0.5, 0.5), "below 1", id="not stationary"),
]))
def test_garch_invalid(args, msg):
    with pytest.raises(ValueError, match=msg):
        gen_garch(10, *args)


def test_ar1_invalid():
    with pytest.raises(ValueError, match=r"\|rho\| < 1"):
        gen_ar1(10, 1.0)


def test_garch_centering():
    constants = garch_centering(1e-6, 0.2, 0.5, draws=100_000)
    assert constants.mean_square == pytest.approx(1e-6 / 0.3)
    bound = math.sqrt(2 / math.pi * constants.mean_square)
    assert 0.85 * bound < constants.mean_abs < bound
    assert constants.draws == 100_000
    assert garch_centering(1e-6, 0.2, 0.5, draws=100_000) is constants


# ----------------------------------------------------------------
#  Profiles and means
# ----------------------------------------------------------------
@pytest.mark.parametrize(*("name, expected", [
    pytest.param("none", [1.0, 1.0, 1.0, 1.0], id="none"),
    pytest.param("a1", [0.125, 0.25, 0.375, 0.5], id="a1"),
    pytest.param("a2", [0.25, 0.25, 0.5, 0.5], id="a2"),
    pytest.param("a3", [1.0, 1.0, 4.0, 4.0], id="a3"),
    pytest.param("a4", [1.0, 1.0, 0.25, 0.25], id="a4"),
]))
def test_profile_values(name, expected):
    np.testing.assert_allclose(profile_values(name, 4), expected)


def test_unknown_profile():
    with pytest.raises(ValueError, match="Unknown profile"):
        profile_values("a9", 4)


def test_variance_profile_jumps():
    assert variance_profile("a2").jumps == (0.5,)
    assert variance_profile("sin").jumps == ()
    assert variance_profile("a1", sigma=2.0).sigma == 2.0


def test_apply_profile_mean_shift():
    spec = DgpSpec("garch", mean=MeanSpec.single_change(0.5, 0.0, 0.5), n=4)
    series = apply_profile(Series([1.0, 2.0, 3.0, 4.0]), spec)
    np.testing.assert_allclose(series.values, [1.0, 2.0, 3.5, 4.5])


def test_apply_profile_scales_errors():
    spec = DgpSpec("gaussian_iid", profile="a2", n=4)
    series = apply_profile(Series([1.0, -1.0, 2.0, -2.0]), spec)
    np.testing.assert_allclose(series.values, [0.25, -0.25, 1.0, -1.0])


def test_generate_is_reproducible():
    spec = DgpSpec("garch", profile="a3", n=64)
    np.testing.assert_array_equal(spec.generate(9).values, spec.generate(9).values)
    child = np.random.SeedSequence(9).spawn(2)[1]
    assert spec.generate(child).n == 64


# ----------------------------------------------------------------
#  Specifications
# ----------------------------------------------------------------
def test_from_dict():
    spec = DgpSpec.from_dict({
        "base": "ar1", "rho": 0.3, "profile": "sin", "n": 100,
        "mean": {"kind": "single_change", "theta": 0.25, "levels": [0.0, 1.0]},
    })
    assert spec.rho == 0.3
    assert spec.mean == MeanSpec.single_change(0.25, 0.0, 1.0)
    assert spec.with_n(200).n == 200
    assert spec.label == "ar1(rho=0.3)|sin|mu=single_change[0.25;0,1]"


def test_from_dict_shift_shorthand():
    spec = DgpSpec.from_dict({"base": "gaussian_iid",
                              "mean": {"kind": "single_change", "shift": 2.0}})
    assert spec.mean == MeanSpec.single_change(0.5, 0.0, 2.0)
    assert DgpSpec.from_dict({"base": "gaussian_iid"}).label == "gaussian_iid|none|mu=0"


@pytest.mark.parametrize(*("data, msg", [
    pytest.param({"base": "gaussian_iid", "sigma": 1}, "Unknown DGP keys", id="key"),
    pytest.param({"profile": "a1"}, "'base'", id="no base"),
    pytest.param({"base": "cauchy"}, "Unknown base", id="base"),
    pytest.param({"base": "gaussian_iid", "n": 3}, "at least 4", id="n"),
    pytest.param({"base": "gaussian_iid", "mean": {"kind": "ramp"}},
                 "Unknown mean kind", id="mean"),
    pytest.param({"base": "ar1", "rho": -1.0}, "rho", id="rho"),
]))
def test_from_dict_invalid(data, msg):
    with pytest.raises(ValueError, match=msg):
        DgpSpec.from_dict(data)


@pytest.mark.slow
def test_partial_sum_variance_follows_profile():
    # b(1) = int_0^1 a(u)^2 du = 0.15625 for the a2 profile
    spec = DgpSpec("gaussian_iid", profile="a2", n=512)
    totals = [spec.generate(seed).values.sum() / math.sqrt(512) for seed in range(5000)]
    assert np.var(totals) == pytest.approx(0.15625, rel=0.06)
