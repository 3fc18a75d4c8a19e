"""The ten CUSUM change point tests and their reports."""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any

import numpy as np

from hetcusum import log
from hetcusum.config import TestConfig, default_seed
from hetcusum.errors import DegenerateInputError
from hetcusum.kernels import (
    ad_weight_kernel,
    empirical_kernel_correlated,
    empirical_kernel_uncorrelated,
)
from hetcusum.lrv import LrvConfig, floor_lrv, lrv_partial, sample_variance
from hetcusum.montecarlo import (
    LimitSample,
    classical_limit_spectrum,
    critical_value,
    p_value,
    sample_weighted_chisq,
    vs_limit_spectrum,
)
from hetcusum.series import (
    Series,
    ad_statistic,
    cm_statistic,
    cusum_process,
    cusum_tied,
)
from hetcusum.spectrum import CLIPPED_MASS_WARNING, eigenvalues

if TYPE_CHECKING:  # pragma: no cover
    from hetcusum.kernels import CovKernel
    from hetcusum.spectrum import Spectrum

SCHEMA_VERSION = 1


class MethodId(str, Enum):

    """
    The test procedures.

    The first letter tells how the statistic is standardized (S: by a
    variance estimate, H: not at all, with a data-driven limit law), the
    second whether the errors are treated as uncorrelated (U) or correlated
    (C), the suffix is the functional (CM: Cramér-von Mises, AD:
    Anderson-Darling). VSU and VSC are the variance-ratio type statistics.
    """

    SUCM = "SUCM"
    SCCM = "SCCM"
    HUCM = "HUCM"
    HCCM = "HCCM"
    SUAD = "SUAD"
    SCAD = "SCAD"
    HUAD = "HUAD"
    HCAD = "HCAD"
    VSU = "VSU"
    VSC = "VSC"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, name: str | MethodId) -> MethodId:
        """Parse a method abbreviation (case-insensitive)."""
        if isinstance(name, MethodId):
            return name
        try:
            return cls(str(name).strip().upper())
        except ValueError:
            msg = f"Unknown method '{name}'. "
            msg += f"Supported methods are: {[m.value for m in cls]}."
            raise ValueError(msg) from None

    @property
    def functional(self) -> str:
        """'CM', 'AD' or 'VS'."""
        return "VS" if self.value.startswith("VS") else self.value[2:]

    @property
    def heteroskedastic(self) -> bool:
        """Whether the limit law is estimated from the data."""
        return self.value.startswith("H")

    @property
    def correlated(self) -> bool:
        """Whether a long-run variance replaces the plain variance."""
        position = 2 if self.functional == "VS" else 1
        return self.value[position] == "C"


# ================================================================
#  Report
# ================================================================
@dataclass(frozen=True)
class TestReport:

    """
    The outcome of one test on one series.

    ``to_dict`` produces the JSON layout; the key order is fixed and
    versioned by ``schema_version``.
    """

    __test__ = False  # not a pytest test class

    method: MethodId
    statistic: float
    p_value: float
    critical_values: dict[float, float]
    spectrum_source: str
    n_terms: int
    config: dict[str, Any]
    warnings: list[str] = field(default_factory=list)
    series: str | None = None
    n: int = 0
    schema_version: int = SCHEMA_VERSION

    def decision(self, alpha: float = 0.05) -> bool:
        """Whether the null hypothesis is rejected at level alpha."""
        return self.p_value < alpha

    def to_dict(self) -> dict[str, Any]:
        """The report as a JSON-compatible dictionary."""
        return {
            "schema_version": self.schema_version,
            "series": self.series,
            "n": self.n,
            "method": self.method.value,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "critical_values": {repr(alpha): value
                                for alpha, value in self.critical_values.items()},
            "spectrum_source": self.spectrum_source,
            "n_terms": self.n_terms,
            "config": dict(self.config),
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TestReport:
        """Rebuild a report from :meth:`to_dict` output."""
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            msg = f"Unsupported report schema version {version}, "
            msg += f"expected {SCHEMA_VERSION}."
            raise ValueError(msg)
        return cls(
            method=MethodId.parse(data["method"]),
            statistic=float(data["statistic"]),
            p_value=float(data["p_value"]),
            critical_values={float(alpha): float(value)
                             for alpha, value in data["critical_values"].items()},
            spectrum_source=data["spectrum_source"],
            n_terms=int(data["n_terms"]),
            config=dict(data["config"]),
            warnings=list(data["warnings"]),
            series=data.get("series"),
            n=int(data["n"]),
        )


# ================================================================
#  Statistics
# ================================================================
def vs_statistic(series: Series, divisor: float) -> float:
    """
    The variance-ratio type statistic.

    ``(1 / (divisor N^2)) sum_k (S'_k - mean(S'))^2`` with
    ``S'_k = sum_{i <= k} (X_i - mean)``.
    """
    if not divisor > 0:
        msg = f"The variance divisor must be positive, got {divisor}."
        raise DegenerateInputError(msg)
    partial = np.cumsum(series.centered())
    deviation = partial - partial.mean()
    return float(np.dot(deviation, deviation) / (divisor * series.n**2))


def _functional_value(series: Series, functional: str, ad_variant: str) -> float:
    if functional == "CM":
        return cm_statistic(cusum_process(series))
    if ad_variant == "tied_down":
        return ad_statistic(cusum_tied(series))
    return ad_statistic(cusum_process(series))


def _divisor(series: Series,
             method: MethodId,
             lrv_config: LrvConfig,
             notes: list[str]) -> float:
    """Plain or long-run variance of the full sample, floored if needed."""
    if not method.correlated:
        return sample_variance(series)
    value = lrv_partial(series, series.n, lrv_config)
    value, count = floor_lrv(value, series)
    notes.append(f"long-run variance divisor: {lrv_config.kernel} lag window "
                 f"with h={lrv_config.bandwidth:g}")
    if count:
        notes.append("floored a nonpositive long-run variance divisor")
    return value


@functools.lru_cache(maxsize=64)
def reference_limit_sample(functional: str,
                           terms: int,
                           replications: int,
                           seed: int) -> LimitSample:
    """
    The data-independent limit law of the S and VS methods.

    Cached, so a simulation reuses one sample for all replications.
    """
    if functional == "VS":
        spectrum = vs_limit_spectrum(terms)
    else:
        spectrum = classical_limit_spectrum(functional, terms)
    return sample_weighted_chisq(spectrum, replications, seed=seed)


def empirical_kernel(series: Series,
                     method: MethodId | str,
                     config: TestConfig | None = None) -> CovKernel:
    """
    The estimated covariance kernel behind an H method.

    Uncorrelated or correlated estimator by the method's second letter,
    Anderson-Darling weighted for HUAD and HCAD.
    """
    method = MethodId.parse(method)
    config = config or TestConfig()
    if not method.heteroskedastic:
        msg = f"{method} has a data-independent limit law and no kernel."
        raise ValueError(msg)
    grid_size = config.resolve(series.n)["grid_size"]
    if method.correlated:
        lrv_config = LrvConfig.for_series(series.n, config.kernel,
                                          config.bandwidth, config.kernel_table)
        kernel = empirical_kernel_correlated(series, lrv_config, grid_size)
    else:
        kernel = empirical_kernel_uncorrelated(series, grid_size)
    if method.functional == "AD":
        kernel = ad_weight_kernel(kernel)
    return kernel


def spectrum_of(kernel: CovKernel, config: TestConfig) -> Spectrum:
    """Eigenvalues of a kernel with the number of terms set by the config."""
    n_terms = config.n_terms
    if n_terms is not None and n_terms > kernel.size:
        log.warning(f"n_terms={n_terms} exceeds the grid size {kernel.size}; "
                    f"using {kernel.size}.")
        n_terms = kernel.size
    return eigenvalues(kernel, n_terms,
                       mass_fraction=config.mass_fraction,
                       max_terms=config.max_terms)


def _empirical_spectrum(series: Series,
                        method: MethodId,
                        config: TestConfig,
                        notes: list[str]) -> Spectrum:
    kernel = empirical_kernel(series, method, config)
    if kernel.floored:
        notes.append(f"floored {kernel.floored} nonpositive partial-sample "
                     "long-run variance value(s)")
    # scale-free kernel, the statistic is divided by the same constant
    spectrum = spectrum_of(kernel.scaled(1.0 / sample_variance(series)), config)
    if spectrum.clipped_mass > CLIPPED_MASS_WARNING:
        notes.append(f"clipped negative eigenvalue mass {spectrum.clipped_mass:.3g}")
    return spectrum


# ================================================================
#  Dispatch
# ================================================================
def run_test(series: Series,
             method: MethodId | str,
             config: TestConfig | None = None,
             seed: int | None = None,
             *,
             limit_sample: LimitSample | None = None) -> TestReport:
    """
    Run one change point test.

    Parameters
    ----------
    series : Series
        The observations (or regression residuals).
    method : MethodId | str
        One of SUCM, SCCM, HUCM, HCCM, SUAD, SCAD, HUAD, HCAD, VSU, VSC.
    config : TestConfig | None (optional)
        The knobs; defaults to ``TestConfig()``.
    seed : int | None (optional)
        Seed of the Monte Carlo limit law. Default: ``HETCUSUM_SEED`` or 0.
    limit_sample : LimitSample | None (optional)
        A precomputed sample of the limit law for the S and VS methods.
        Its term count is echoed as ``n_terms``; a sample built without one
        is assumed to use ``config.classical_terms``.

    Returns
    -------
    TestReport

    Raises
    ------
    DegenerateInputError
        If the series is constant or its sample variance underflows to zero.

    Examples
    --------
    .. code-block:: python

        from hetcusum import Series, run_test

        report = run_test(Series([0.0, 0.0, 1.0, 1.0]), "SUCM")
        report.statistic  # 0.375

    """
    method = MethodId.parse(method)
    config = config or TestConfig()
    seed = default_seed(seed)
    if series.is_constant:
        msg = f"The series '{series.name or 'unnamed'}' is constant; "
        msg += f"{method} has a zero variance divisor."
        raise DegenerateInputError(msg)
    if not sample_variance(series) > 0:
        msg = f"The series '{series.name or 'unnamed'}' has a sample variance "
        msg += f"that underflows to zero; {method} cannot be scaled by it."
        raise DegenerateInputError(msg)

    knobs = config.resolve(series.n)
    lrv_config = LrvConfig.for_series(series.n, config.kernel, config.bandwidth,
                                      config.kernel_table)
    notes: list[str] = []
    scale = 1.0

    if method.functional == "VS":
        statistic = vs_statistic(series, _divisor(series, method, lrv_config, notes))
    elif method.heteroskedastic:
        statistic = _functional_value(series, method.functional, config.ad_variant)
        scale = sample_variance(series)
    else:
        raw = _functional_value(series, method.functional, config.ad_variant)
        statistic = raw / _divisor(series, method, lrv_config, notes)

    if method.heteroskedastic:
        spectrum = _empirical_spectrum(series, method, config, notes)
        sample = sample_weighted_chisq(spectrum, config.replications, seed=seed)
        if limit_sample is not None:
            log.warning(f"Ignoring the precomputed limit sample for {method}: "
                        "its limit law depends on the data.")
        source, n_terms = spectrum.source, spectrum.m
    else:
        if limit_sample is None:
            limit_sample = reference_limit_sample(
                method.functional, config.classical_terms,
                config.replications, seed)
        sample = limit_sample
        n_terms = sample.terms or config.classical_terms
        source = sample.source

    p = p_value(sample, statistic / scale, correction=config.p_value_correction)
    critical = {alpha: critical_value(sample, alpha) * scale
                for alpha in config.alphas}
    knobs["n_terms"] = n_terms
    knobs["seed"] = sample.seed
    for note in notes:
        log.debug(f"{method}: {note}")
    return TestReport(
        method=method,
        statistic=float(statistic),
        p_value=float(p),
        critical_values=critical,
        spectrum_source=source,
        n_terms=n_terms,
        config=knobs,
        warnings=notes,
        series=series.name,
        n=series.n,
    )
