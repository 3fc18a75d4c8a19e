"""Test the Nyström eigenvalues."""
import numpy as np
import pytest

from hetcusum.kernels import (
    CovKernel,
    VarianceProfile,
    ad_weight_kernel,
    empirical_kernel_uncorrelated,
    midpoint_grid,
    theoretical_kernel,
)
from hetcusum.montecarlo import classical_limit_spectrum
from hetcusum.series import Series
from hetcusum.spectrum import Spectrum, all_eigenvalues, default_terms, eigenvalues

# ================================================================
#  Fixtures
# ================================================================


@pytest.fixture(scope="module")
def bridge_1000():
    return theoretical_kernel(VarianceProfile(lambda _: 1.0), 1000)


# ================================================================
#  Tests
# ================================================================

# ----------------------------------------------------------------
#  Spectrum container
# ----------------------------------------------------------------
@pytest.mark.parametrize(*("kwargs, msg", [
    pytest.param({"weights": []}, "at least one", id="empty"),
    pytest.param({"weights": [0.5, -0.1]}, "nonnegative", id="negative"),
    pytest.param({"weights": [0.1, 0.5]}, "descending", id="ascending"),
    pytest.param({"weights": [0.5], "dof": 3}, "dof", id="dof"),
    pytest.param({"weights": [0.5], "source": "guess"}, "Unknown spectrum source",
                 id="source"),
]))
def test_spectrum_invalid(kwargs, msg):
    with pytest.raises(ValueError, match=msg):
        Spectrum(**kwargs)


def test_spectrum_helpers():
    spectrum = Spectrum([0.5, 0.25, 0.125], source="VS", dof=2)
    assert spectrum.m == 3
    assert spectrum.mean == pytest.approx(1.75)
    assert spectrum.truncated(2).m == 2
    np.testing.assert_allclose(spectrum.scaled(2.0).weights, [1.0, 0.5, 0.25])
    with pytest.raises(ValueError, match="m must satisfy"):
        spectrum.truncated(4)


@pytest.mark.parametrize(*("weights, fraction, max_terms, expected", [
    pytest.param([0.5, 0.3, 0.2], 0.8, 100, 2, id="exact share"),
    pytest.param([0.5, 0.3, 0.2], 0.81, 100, 3, id="above share"),
    pytest.param([0.5, 0.3, 0.2], 1.0, 100, 3, id="everything"),
    pytest.param([0.5, 0.3, 0.2], 1.0, 2, 2, id="capped"),
    pytest.param([0.0, 0.0], 0.999, 100, 1, id="zero mass"),
]))
def test_default_terms(weights, fraction, max_terms, expected):
    assert default_terms(weights, fraction, max_terms) == expected


# ----------------------------------------------------------------
#  Closed-form spectra
# ----------------------------------------------------------------
def test_bridge_spectrum(bridge_1000):
    spectrum = eigenvalues(bridge_1000, 5)
    k = np.arange(1, 6)
    np.testing.assert_allclose(spectrum.weights, 1 / (k**2 * np.pi**2), rtol=1e-3)
    assert spectrum.weights[:2] == pytest.approx([0.101321, 0.025330], rel=1e-3)
    assert spectrum.source == "theoretical"


def test_ad_bridge_spectrum(bridge_1000):
    spectrum = eigenvalues(ad_weight_kernel(bridge_1000), 5)
    k = np.arange(1, 6)
    np.testing.assert_allclose(spectrum.weights, 1 / (k * (k + 1)), rtol=5e-3)


def test_bridge_trace(bridge_1000):
    values, clipped = all_eigenvalues(bridge_1000)
    assert values.sum() == pytest.approx(1 / 6, abs=1e-3)
    assert clipped < 1e-10


def test_matches_classical_spectrum(bridge_1000):
    nystrom = eigenvalues(bridge_1000, 5).weights
    closed = classical_limit_spectrum("CM", 5).weights
    np.testing.assert_allclose(nystrom, closed, rtol=1e-3)


# ----------------------------------------------------------------
#  Properties
# ----------------------------------------------------------------
def test_trace_consistency(rng):
    kernel = theoretical_kernel(VarianceProfile(lambda t: 1.0 + t), 200)
    values, _ = all_eigenvalues(kernel)
    trace = np.trace(kernel.values) / kernel.size
    assert values.sum() == pytest.approx(trace, rel=1e-8)

    empirical = empirical_kernel_uncorrelated(Series(rng.standard_normal(300)), 64)
    values, _ = all_eigenvalues(empirical)
    assert (np.diff(values) <= 0).all()
    assert (values >= 0).all()


def test_scaling(rng):
    kernel = empirical_kernel_uncorrelated(Series(rng.standard_normal(200)), 50)
    base = eigenvalues(kernel, 10).weights
    np.testing.assert_allclose(eigenvalues(kernel.scaled(3.0), 10).weights,
                               3.0 * base, rtol=1e-10, atol=1e-15)


def test_zero_kernel():
    kernel = CovKernel(midpoint_grid(8), np.zeros((8, 8)))
    spectrum = eigenvalues(kernel)
    assert spectrum.m == 1
    assert (spectrum.weights == 0).all()
    assert (eigenvalues(kernel, 4).weights == 0).all()


def test_automatic_terms():
    kernel = theoretical_kernel(VarianceProfile(lambda _: 1.0), 256)
    spectrum = eigenvalues(kernel, mass_fraction=0.9, max_terms=50)
    values, _ = all_eigenvalues(kernel)
    assert spectrum.m == default_terms(values, 0.9, 50)
    assert 1 < spectrum.m < 50


@pytest.mark.parametrize("m", [0, 9])
def test_invalid_terms(m):
    kernel = CovKernel(midpoint_grid(8), np.eye(8))
    with pytest.raises(ValueError, match="m must satisfy"):
        eigenvalues(kernel, m)


def test_clipped_mass_warning(caplog):
    kernel = CovKernel(midpoint_grid(2), np.array([[0.0, 1.0], [1.0, 0.0]]), source="file")
    spectrum = eigenvalues(kernel, 2)
    np.testing.assert_allclose(spectrum.weights, [0.5, 0.0])
    assert spectrum.clipped_mass == pytest.approx(1.0)
    assert "Clipped negative eigenvalue mass" in caplog.text


@pytest.mark.slow
def test_empirical_leading_eigenvalue():
    rng = np.random.default_rng(7)
    leading = [eigenvalues(empirical_kernel_uncorrelated(
        Series(rng.standard_normal(4096)), 256), 1).weights[0] for _ in range(100)]
    assert np.median(leading) == pytest.approx(1 / np.pi**2, rel=0.1)
