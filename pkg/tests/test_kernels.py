"""Test the covariance kernels."""
import numpy as np
import pytest

from hetcusum.dgp import DgpSpec, variance_profile
from hetcusum.kernels import (
    CovKernel,
    VarianceProfile,
    ad_weight_kernel,
    covariance_from_path,
    empirical_kernel_correlated,
    empirical_kernel_uncorrelated,
    kernel_l2_distance,
    kernel_l2_norm,
    midpoint_grid,
    partial_variance_path,
    scaled_kernel_limit,
    theoretical_covariance,
    theoretical_kernel,
)
from hetcusum.lrv import LrvConfig
from hetcusum.series import Series
from hetcusum.spectrum import eigenvalues

# ================================================================
#  Helpers
# ================================================================


def bridge(grid):
    return np.minimum.outer(grid, grid) - np.outer(grid, grid)


def step_profile(t):
    return 1.0 if t <= 0.5 else 2.0  # noqa: PLR2004


# ================================================================
#  Tests
# ================================================================

# ----------------------------------------------------------------
#  Grid and container
# ----------------------------------------------------------------
def test_midpoint_grid():
    np.testing.assert_allclose(midpoint_grid(4), [0.125, 0.375, 0.625, 0.875])


@pytest.mark.parametrize(*("grid, values, msg", [
    pytest.param([0.25, 0.75], np.zeros((3, 3)), "2x2", id="shape"),
    pytest.param([0.75, 0.25], np.zeros((2, 2)), "increasing", id="unsorted"),
    pytest.param([0.5, 1.5], np.zeros((2, 2)), r"\[0, 1\]", id="outside"),
    pytest.param([0.25, 0.75], [[1.0, 0.5], [0.4, 1.0]], "symmetric", id="asymmetric"),
]))
def test_kernel_invalid(grid, values, msg):
    with pytest.raises(ValueError, match=msg):
        CovKernel(np.asarray(grid), np.asarray(values))


def test_kernel_csv(temp_dir):
    kernel = ad_weight_kernel(theoretical_kernel(VarianceProfile(lambda _: 1.0), 16))
    kernel.to_csv(temp_dir / "kernel.csv")
    with (temp_dir / "kernel.csv").open() as file:
        assert file.readline().strip() == "# G=16 weighted=1"
    loaded = CovKernel.from_csv(temp_dir / "kernel.csv")
    assert loaded.weighted
    assert loaded.source == "file"
    np.testing.assert_array_equal(loaded.values, kernel.values)

    kernel.to_csv(temp_dir / "kernel.npy")
    np.testing.assert_array_equal(CovKernel.from_csv(temp_dir / "kernel.npy").values,
                                  kernel.values)


# ----------------------------------------------------------------
#  Theoretical kernel
# ----------------------------------------------------------------
def test_theoretical_homoskedastic():
    kernel = theoretical_kernel(VarianceProfile(lambda _: 1.0), 64)
    assert kernel.source == "theoretical"
    np.testing.assert_allclose(kernel.values, bridge(kernel.grid), atol=1e-10)
    assert theoretical_covariance(VarianceProfile(lambda _: 1.0), 0.5, 0.5) == \
        pytest.approx(0.25)


def test_theoretical_step_profile():
    profile = VarianceProfile(step_profile, jumps=(0.5,))
    assert profile.clock([1.0])[0] == pytest.approx(2.5)
    assert theoretical_covariance(profile, 0.5, 0.5) == pytest.approx(0.625)


def test_theoretical_sigma():
    base = theoretical_kernel(variance_profile("a1"), 32)
    scaled = theoretical_kernel(variance_profile("a1", sigma=2.0), 32)
    np.testing.assert_allclose(scaled.values, 4.0 * base.values, rtol=1e-12)


def test_theoretical_diagonal_ends():
    kernel = theoretical_kernel(VarianceProfile(lambda _: 1.0), 256)
    diagonal = np.diag(kernel.values)
    assert diagonal[0] < 1 / 256
    assert diagonal[-1] < 1 / 256


def test_theoretical_small_grid():
    with pytest.raises(ValueError, match="at least 16"):
        theoretical_kernel(VarianceProfile(lambda _: 1.0), 8)


def test_invalid_sigma():
    with pytest.raises(ValueError, match="sigma"):
        VarianceProfile(lambda _: 1.0, sigma=0.0)


# ----------------------------------------------------------------
#  Empirical kernels
# ----------------------------------------------------------------
def test_partial_variance_path():
    path = partial_variance_path(Series([0.0, 0.0, 1.0, 1.0]))
    np.testing.assert_allclose(path, np.arange(5) / 16)


def test_covariance_from_path():
    path = partial_variance_path(Series([0.0, 0.0, 1.0, 1.0]))
    assert covariance_from_path(path, 0.5, 0.5) == pytest.approx(0.0625)
    assert covariance_from_path(path, 0.3, 0.0) == 0
    assert covariance_from_path(path, 0.0, 0.7) == 0


def test_uncorrelated_matches_point_evaluation(rng):
    series = Series(rng.standard_normal(37))
    kernel = empirical_kernel_uncorrelated(series, 12)
    path = partial_variance_path(series)
    expected = np.array([[covariance_from_path(path, t, s) for s in kernel.grid]
                         for t in kernel.grid])
    np.testing.assert_allclose(kernel.values, expected, atol=1e-14)
    assert kernel.source == "empirical-uncorrelated"
    assert not kernel.weighted


@pytest.mark.parametrize("build", [
    pytest.param(lambda s: empirical_kernel_uncorrelated(s, 8), id="uncorrelated"),
    pytest.param(lambda s: empirical_kernel_correlated(s, LrvConfig(bandwidth=2), 8),
                 id="correlated"),
])
def test_empirical_constant(build):
    kernel = build(Series([1.5] * 10))
    assert (kernel.values == 0).all()
    assert kernel.floored == 0


def test_correlated_without_lags_is_uncorrelated(rng):
    series = Series(rng.standard_normal(100))
    correlated = empirical_kernel_correlated(series, LrvConfig(bandwidth=1), 50)
    uncorrelated = empirical_kernel_uncorrelated(series, 50)
    np.testing.assert_array_equal(correlated.values, uncorrelated.values)
    assert correlated.source == "empirical-correlated"


def test_correlated_floors_negative_path(caplog):
    # K(1) = 1 is not positive definite, g_{N,k} = (2 - k)/20
    config = LrvConfig("custom", table=((0.0, 1.0), (1.0, 1.0), (2.0, 0.0)))
    kernel = empirical_kernel_correlated(Series([1.0, -1.0] * 10), config, 10)
    assert kernel.floored > 0
    assert "Floored" in caplog.text


def test_kernels_symmetric(rng):
    series = Series(rng.standard_normal(300))
    for kernel in [empirical_kernel_uncorrelated(series, 64),
                   empirical_kernel_correlated(series, LrvConfig(bandwidth=6), 64)]:
        np.testing.assert_array_equal(kernel.values, kernel.values.T)


@pytest.mark.slow
def test_correlated_ratio_ar1():
    from hetcusum.dgp import gen_ar1

    n = 4000
    config = LrvConfig.for_series(n)
    ratios = []
    for seed in range(100):
        series = gen_ar1(n, 0.5, seed)
        mid = 127  # grid point 0.498
        correlated = empirical_kernel_correlated(series, config, 256).values[mid, mid]
        uncorrelated = empirical_kernel_uncorrelated(series, 256).values[mid, mid]
        ratios.append(correlated / uncorrelated)
    assert np.mean(ratios) == pytest.approx(3.0, rel=0.25)


# ----------------------------------------------------------------
#  Anderson-Darling weighting
# ----------------------------------------------------------------
def test_ad_weight_bridge_diagonal():
    kernel = ad_weight_kernel(theoretical_kernel(VarianceProfile(lambda _: 1.0), 64))
    assert kernel.weighted
    np.testing.assert_allclose(np.diag(kernel.values), 1.0, atol=1e-10)


def test_ad_weight_zero_and_symmetry():
    zero = CovKernel(midpoint_grid(4), np.zeros((4, 4)))
    assert (ad_weight_kernel(zero).values == 0).all()
    weighted = ad_weight_kernel(theoretical_kernel(
        VarianceProfile(step_profile, jumps=(0.5,)), 32))
    np.testing.assert_array_equal(weighted.values, weighted.values.T)


def test_ad_weight_twice():
    kernel = ad_weight_kernel(CovKernel(midpoint_grid(4), np.eye(4)))
    with pytest.raises(ValueError, match="already weighted"):
        ad_weight_kernel(kernel)


def test_ad_weight_endpoint():
    kernel = CovKernel(np.array([0.0, 0.5, 1.0]), np.zeros((3, 3)))
    with pytest.raises(ValueError, match="inside"):
        ad_weight_kernel(kernel)


# ----------------------------------------------------------------
#  Diagnostics
# ----------------------------------------------------------------
def test_l2_norm_and_distance():
    grid = midpoint_grid(4)
    one = CovKernel(grid, np.ones((4, 4)))
    zero = CovKernel(grid, np.zeros((4, 4)))
    assert kernel_l2_norm(one) == pytest.approx(1.0)
    assert kernel_l2_norm(zero) == 0
    assert kernel_l2_distance(one, zero) == pytest.approx(1.0)
    assert kernel_l2_norm(scaled_kernel_limit(one, 4.0)) == pytest.approx(0.25)
    with pytest.raises(ValueError, match="different grids"):
        kernel_l2_distance(one, CovKernel(midpoint_grid(2), np.ones((2, 2))))


@pytest.mark.slow
def test_correlated_norm_grows_with_bandwidth():
    n = 4096
    mean = np.where(np.arange(1, n + 1) > n // 2, 2.0, 0.0)
    bandwidths = np.array([4, 8, 16, 32])
    slopes = []
    for seed in range(50):
        rng = np.random.default_rng(seed)
        series = Series(mean + rng.standard_normal(n))
        norms = [kernel_l2_norm(empirical_kernel_correlated(
            series, LrvConfig(bandwidth=float(h)), 256)) for h in bandwidths]
        slopes.append(np.polyfit(np.log(bandwidths), np.log(norms), 1)[0])
    assert 0.7 <= np.median(slopes) <= 1.3


@pytest.mark.slow
def test_top_eigenvalue_grows_with_bandwidth():
    n = 4096
    mean = np.where(np.arange(1, n + 1) > n // 2, 2.0, 0.0)
    bandwidths = np.array([8, 16, 32, 64])
    slopes = []
    for seed in range(30):
        rng = np.random.default_rng(seed)
        series = Series(mean + rng.standard_normal(n))
        tops = [eigenvalues(empirical_kernel_correlated(
            series, LrvConfig(bandwidth=float(h)), 128), 1).weights[0]
            for h in bandwidths]
        slopes.append(np.polyfit(np.log(bandwidths), np.log(tops), 1)[0])
    assert 0.7 <= np.median(slopes) <= 1.3


@pytest.mark.slow
def test_uncorrelated_estimator_converges_under_garch():
    omega, alpha, beta = 1e-6, 0.2, 0.5
    variance = omega / (1 - alpha - beta)
    target = theoretical_kernel(variance_profile("a1"), 128)
    medians = []
    for n in [512, 4096]:
        spec = DgpSpec("garch", profile="a1", n=n, omega=omega, alpha=alpha, beta=beta)
        distances = [kernel_l2_distance(
            empirical_kernel_uncorrelated(spec.generate(seed), 128).scaled(1 / variance),
            target) for seed in range(30)]
        medians.append(np.median(distances))
    assert medians[1] < 0.75 * medians[0]
