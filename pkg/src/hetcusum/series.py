"""Observed series, CUSUM processes and the Cramér-von Mises / Anderson-Darling functionals."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Literal

import numpy as np
from scipy import integrate

from hetcusum.errors import QuadratureError

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Callable, Sequence

MIN_LENGTH = 4


# ================================================================
#  Series
# ================================================================
@dataclass(frozen=True, eq=False)
class Series:

    """
    An observed real-valued sequence X_1, ..., X_N.

    Parameters
    ----------
    values : array_like
        The observations. Must be finite and contain at least four values.
    name : str | None (optional)
        A label used in reports (e.g. the CSV column the values came from).

    Examples
    --------
    .. code-block:: python

        from hetcusum import Series

        series = Series([0.0, 0.0, 1.0, 1.0], name="toy")
        series.n  # 4

    """

    values: np.ndarray
    name: str | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).ravel()
        if values.size < MIN_LENGTH:
            msg = f"A series needs at least {MIN_LENGTH} observations, "
            msg += f"got {values.size}."
            raise ValueError(msg)
        if not np.isfinite(values).all():
            bad = np.flatnonzero(~np.isfinite(values))
            msg = "A series must only contain finite values. "
            msg += f"Found non-finite values at positions {bad[:10].tolist()}."
            raise ValueError(msg)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        """The length N of the series."""
        return self.values.size

    @property
    def mean(self) -> float:
        """The sample mean, computed with exact float summation."""
        return math.fsum(self.values) / self.n

    @property
    def is_constant(self) -> bool:
        """Whether all observations are equal."""
        return bool(np.ptp(self.values) == 0)

    def centered(self) -> np.ndarray:
        """Return X_i - mean (zeros for a constant series)."""
        if self.is_constant:
            return np.zeros(self.n)
        return self.values - self.mean

    def with_values(self, values: np.ndarray) -> Series:
        """Return a new series with the same name and other values."""
        return Series(values, name=self.name)

    def __len__(self) -> int:
        return self.n


def _compensated_cumsum(values: np.ndarray) -> np.ndarray:
    """Partial sums S_0 = 0, S_1, ..., S_N with Neumaier compensation."""
    sums = np.zeros(values.size + 1)
    total = 0.0
    compensation = 0.0
    for k, value in enumerate(values.tolist(), start=1):
        t = total + value
        if abs(total) >= abs(value):
            compensation += (total - t) + value
        else:
            compensation += (value - t) + total
        total = t
        sums[k] = total + compensation
    return sums


# ================================================================
#  CUSUM process
# ================================================================
@dataclass(frozen=True, eq=False)
class CusumProcess:

    """
    The CUSUM step function evaluated on its jump grid.

    For the standard variant ``z[k]`` is the value of Z_N on
    ``[k/N, (k+1)/N)`` for ``k = 0..N``. For the tied-down variant ``z[j]``
    is the value on ``[j/(N+1), (j+1)/(N+1))`` for ``j = 0..N+1``.
    """

    z: np.ndarray
    n: int
    variant: Literal["standard", "tied_down"] = "standard"

    def __post_init__(self) -> None:
        expected = self.n + 1 if self.variant == "standard" else self.n + 2
        if self.z.size != expected:
            msg = f"A {self.variant} CUSUM process of length N={self.n} "
            msg += f"needs {expected} values, got {self.z.size}."
            raise ValueError(msg)

    @property
    def grid(self) -> np.ndarray:
        """The left ends of the constancy intervals (plus the right end 1)."""
        if self.variant == "standard":
            return np.arange(self.n + 1) / self.n
        return np.arange(self.n + 2) / (self.n + 1)


def cusum_process(series: Series) -> CusumProcess:
    """
    Compute Z_N(k/N) = N^{-1/2} (S_k - (k/N) S_N) for k = 0..N.

    Parameters
    ----------
    series : Series
        The observations.

    Returns
    -------
    CusumProcess
        The standard CUSUM process; ``z[0] = z[N] = 0``.

    """
    n = series.n
    partial = _compensated_cumsum(series.centered())
    k = np.arange(n + 1)
    z = (partial - k / n * partial[-1]) / math.sqrt(n)
    # both ends vanish by definition
    z[0] = 0.0
    z[-1] = 0.0
    if series.is_constant:
        z[:] = 0.0
    z.setflags(write=False)
    return CusumProcess(z=z, n=n, variant="standard")


def cusum_tied(series: Series) -> CusumProcess:
    """
    Compute the tied-down CUSUM process on the grid u = j/(N+1), j = 0..N+1.

    The value on ``[j/(N+1), (j+1)/(N+1))`` uses the partial sum with index
    ``floor((N+1)u) = j``, so it equals the standard process at index ``j``
    for ``j <= N``; the process is 0 at both ends.
    """
    standard = cusum_process(series)
    z = np.append(standard.z, 0.0)
    z.setflags(write=False)
    return CusumProcess(z=z, n=series.n, variant="tied_down")


# ================================================================
#  Functionals
# ================================================================
def cm_statistic(process: CusumProcess) -> float:
    """
    Integrate Z_N^2 over [0, 1] exactly.

    Z_N is constant on ``[k/N, (k+1)/N)``, so the integral is
    ``(1/N) sum_{k<N} z[k]^2``.
    """
    if process.variant != "standard":
        msg = "The Cramér-von Mises statistic is defined on the standard "
        msg += f"CUSUM process, got variant '{process.variant}'."
        raise ValueError(msg)
    z = process.z[:-1]
    return float(np.dot(z, z) / process.n)


def _log_odds(t: np.ndarray) -> np.ndarray:
    return np.log(t) - np.log1p(-t)


def ad_statistic(process: CusumProcess) -> float:
    """
    Integrate Z^2(t) / (t(1-t)) exactly over the constancy intervals.

    The standard process is integrated over ``[1/N, 1-1/N]``, the tied-down
    process over ``[1/(N+1), N/(N+1)]``. On every interval the weight
    integrates to the difference of ``ln(t/(1-t))`` at the interval ends.
    """
    n = process.n
    if process.variant == "standard":
        k = np.arange(1, n - 1)
        left, right = k / n, (k + 1) / n
    else:
        k = np.arange(1, n)
        left, right = k / (n + 1), (k + 1) / (n + 1)
    values = process.z[k]
    weights = _log_odds(right) - _log_odds(left)
    return float(np.dot(values * values, weights))


# ================================================================
#  Mean specifications and drift
# ================================================================
@dataclass(frozen=True)
class MeanSpec:

    """
    The mean sequence mu_i of the observations.

    Use the constructors :meth:`constant`, :meth:`single_change`,
    :meth:`multi_change` and :meth:`trend_after`.
    """

    kind: Literal["constant", "single_change", "multi_change", "trend_after"]
    breakpoints: tuple[float, ...] = ()
    levels: tuple[float, ...] = (0.0,)
    trend: Callable[[float], float] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        theta = np.asarray(self.breakpoints, dtype=float)
        if theta.size and (theta.min() <= 0 or theta.max() >= 1):
            msg = f"Breakpoints must lie in (0, 1), got {list(self.breakpoints)}."
            raise ValueError(msg)
        if theta.size > 1 and not (np.diff(theta) > 0).all():
            msg = "Breakpoints must be strictly increasing, "
            msg += f"got {list(self.breakpoints)}."
            raise ValueError(msg)
        if self.kind == "trend_after":
            if self.trend is None or len(self.breakpoints) != 1:
                msg = "A trend_after mean needs one breakpoint and a trend function."
                raise ValueError(msg)
        elif len(self.levels) != len(self.breakpoints) + 1:
            msg = f"{len(self.breakpoints)} breakpoints need "
            msg += f"{len(self.breakpoints) + 1} levels, got {len(self.levels)}."
            raise ValueError(msg)

    @classmethod
    def constant(cls, level: float = 0.0) -> MeanSpec:
        """No change: mu_i = level."""
        return cls("constant", (), (float(level),))

    @classmethod
    def single_change(cls, theta: float, mu1: float, mu2: float) -> MeanSpec:
        """mu_i = mu1 up to floor(N theta), mu2 afterwards."""
        return cls("single_change", (float(theta),), (float(mu1), float(mu2)))

    @classmethod
    def multi_change(cls,
                     breakpoints: Sequence[float],
                     levels: Sequence[float]) -> MeanSpec:
        """Piecewise constant mean with a level per segment."""
        return cls("multi_change",
                   tuple(float(b) for b in breakpoints),
                   tuple(float(v) for v in levels))

    @classmethod
    def trend_after(cls,
                    theta: float,
                    mu1: float,
                    trend: Callable[[float], float]) -> MeanSpec:
        """mu_i = mu1 up to floor(N theta), trend(i/N) afterwards."""
        return cls("trend_after", (float(theta),), (float(mu1),), trend)

    def means(self, n: int) -> np.ndarray:
        """The mean sequence mu_1, ..., mu_n."""
        i = np.arange(1, n + 1)
        if self.kind == "trend_after":
            cut = math.floor(n * self.breakpoints[0])
            after = np.array([self.trend(j / n) for j in i], dtype=float)
            return np.where(i <= cut, self.levels[0], after)
        cuts = np.floor(n * np.asarray(self.breakpoints)).astype(int)
        segment = np.searchsorted(cuts, i, side="left")
        return np.asarray(self.levels, dtype=float)[segment]

    def integrated_mean(self, t: np.ndarray) -> np.ndarray:
        """The integral of the limiting mean function over [0, t]."""
        t = np.asarray(t, dtype=float)
        if self.kind == "trend_after":
            theta = self.breakpoints[0]
            mu1 = self.levels[0]
            return np.array([
                mu1 * min(u, theta)
                + (_quad(self.trend, theta, u) if u > theta else 0.0)
                for u in t.ravel()]).reshape(t.shape)
        edges = np.concatenate([[0.0], self.breakpoints, [1.0]])
        total = np.zeros_like(t)
        for level, lo, hi in zip(self.levels, edges[:-1], edges[1:], strict=True):
            total += level * np.clip(t - lo, 0.0, hi - lo)
        return total


def _quad(func: Callable[[float], float],
          a: float, b: float,
          points: Sequence[float] | None = None) -> float:
    """Adaptive quadrature that raises instead of warning."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(func, a, b, points=points, limit=200)
        except integrate.IntegrationWarning as error:
            msg = f"Quadrature on [{a}, {b}] did not converge: {error}"
            raise QuadratureError(msg) from error
    if not math.isfinite(value):
        msg = f"Quadrature on [{a}, {b}] returned a non-finite value."
        raise QuadratureError(msg)
    return value


def drift_profile(mean: MeanSpec, grid: Sequence[float]) -> np.ndarray:
    """
    Evaluate the CUSUM drift d(t) on a grid of points in [0, 1].

    ``d(t) = M(t) - t M(1)`` where ``M`` integrates the limiting mean
    function; this reproduces the case formulas for one change, several
    changes and a trend after the change.
    """
    t = np.asarray(grid, dtype=float)
    if t.size and (t.min() < 0 or t.max() > 1):
        msg = "The drift is only defined on [0, 1]."
        raise ValueError(msg)
    if mean.kind == "constant":
        return np.zeros_like(t)
    return mean.integrated_mean(t) - t * mean.integrated_mean(np.array(1.0))


def drift_integral(mean: MeanSpec, *, weighted: bool = False) -> float:
    """
    Return the consistency limit of the scaled statistics.

    Parameters
    ----------
    mean : MeanSpec
        The mean sequence.
    weighted : bool, default=False
        If False return the integral of d^2; if True the integral of
        d^2(t) / (t(1-t)), the limit of the Anderson-Darling version.

    """
    if mean.kind == "constant":
        return 0.0

    def integrand(u: float) -> float:
        d = float(drift_profile(mean, [u])[0])
        if weighted:
            return d * d / (u * (1.0 - u))
        return d * d

    return _quad(integrand, 0.0, 1.0, points=list(mean.breakpoints) or None)
