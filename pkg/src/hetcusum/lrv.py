"""Partial-sample autocovariances and kernel long-run variance estimators."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal

import numpy as np

from hetcusum import log

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Sequence

    from hetcusum.series import Series

SUPPORTED_KERNELS = {"bartlett", "parzen", "custom"}
LIPSCHITZ_PROBES = 1001
LIPSCHITZ_BOUND = 1e6
FLOOR_FACTOR = 1e-12


# ================================================================
#  Kernel configuration
# ================================================================
@dataclass(frozen=True)
class LrvConfig:

    """
    Kernel and bandwidth of the long-run variance estimator.

    Parameters
    ----------
    kernel : "bartlett" | "parzen" | "custom", default="bartlett"
        The lag window K. Bartlett and Parzen have support c = 1.
    bandwidth : float, default=1.0
        The window parameter h (h >= 1); lag l gets weight K(l/h).
    table : tuple[tuple[float, float], ...] | None (optional)
        ``(u, K(u))`` pairs of a custom kernel for u >= 0, starting at
        ``(0, 1)`` and ending with a zero weight at the support c.

    """

    kernel: Literal["bartlett", "parzen", "custom"] = "bartlett"
    bandwidth: float = 1.0
    table: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self) -> None:
        if self.kernel not in SUPPORTED_KERNELS:
            msg = f"Unknown kernel '{self.kernel}'. "
            msg += f"Supported kernels are: {sorted(SUPPORTED_KERNELS)}."
            raise ValueError(msg)
        if not self.bandwidth >= 1:
            msg = f"The bandwidth must be at least 1, got {self.bandwidth}."
            raise ValueError(msg)
        if self.kernel == "custom":
            object.__setattr__(self, "table", _validate_table(self.table))

    @classmethod
    def for_series(cls,
                   n: int,
                   kernel: str = "bartlett",
                   bandwidth: float | None = None,
                   table: Sequence[tuple[float, float]] | None = None,
                   ) -> LrvConfig:
        """Resolve the default bandwidth floor(N^{1/3}) for a series of length n."""
        if bandwidth is None:
            bandwidth = max(1, math.floor(n ** (1 / 3) + 1e-9))
        table = None if table is None else tuple(tuple(row) for row in table)
        return cls(kernel=kernel, bandwidth=float(bandwidth), table=table)

    @property
    def support(self) -> float:
        """The constant c with K(u) = 0 for |u| > c."""
        if self.kernel == "custom":
            return self.table[-1][0]
        return 1.0

    @property
    def max_lag(self) -> int:
        """The largest lag that can get a nonzero weight, ceil(c h)."""
        return math.ceil(self.support * self.bandwidth)


def _validate_table(table: Sequence[tuple[float, float]] | None,
                    ) -> tuple[tuple[float, float], ...]:
    """Check the kernel conditions on a custom kernel table."""
    if table is None or len(table) < 2:  # noqa: PLR2004
        msg = "A custom kernel needs a table with at least two (u, K(u)) rows."
        raise ValueError(msg)
    points = np.asarray(table, dtype=float)
    u, k = points[:, 0], points[:, 1]
    problems = []
    if u[0] != 0 or k[0] != 1:
        problems.append("the table must start at (0, 1)")
    if not (np.diff(u) > 0).all():
        problems.append("u values must be strictly increasing")
    if (k < 0).any():
        problems.append("weights must be nonnegative")
    if k[-1] != 0:
        problems.append("the last weight must be 0 (end of the support)")
    if not problems:
        probe = np.linspace(0, u[-1], LIPSCHITZ_PROBES)
        slopes = np.abs(np.diff(np.interp(probe, u, k)) / np.diff(probe))
        if slopes.max() > LIPSCHITZ_BOUND:
            problems.append("the kernel is not Lipschitz on the probe grid")
    if problems:
        msg = "Invalid custom kernel: " + "; ".join(problems) + "."
        raise ValueError(msg)
    return tuple((float(a), float(b)) for a, b in points)


def kernel_weight(config: LrvConfig, u: float | np.ndarray) -> float | np.ndarray:
    """
    Evaluate the lag window K at u.

    Examples
    --------
    .. code-block:: python

        from hetcusum.lrv import LrvConfig, kernel_weight

        kernel_weight(LrvConfig(), 0.5)  # 0.5

    """
    a = np.abs(np.asarray(u, dtype=float))
    if config.kernel == "bartlett":
        weight = np.clip(1.0 - a, 0.0, None)
    elif config.kernel == "parzen":
        weight = np.where(
            a <= 0.5,  # noqa: PLR2004
            1.0 - 6.0 * a**2 + 6.0 * a**3,
            np.where(a <= 1.0, 2.0 * (1.0 - a) ** 3, 0.0))
    else:
        points = np.asarray(config.table)
        weight = np.interp(a, points[:, 0], points[:, 1], right=0.0)
    if weight.ndim == 0:
        return float(weight)
    return weight


# ================================================================
#  Estimators
# ================================================================
def autocov_partial(series: Series, k: int, lag: int) -> float:
    """
    Lag-``lag`` autocovariance of X_1..X_k around the full-sample mean.

    The divisor is N, not k.
    """
    n = series.n
    if not 1 <= k <= n:
        msg = f"The partial sample size must satisfy 1 <= k <= {n}, got {k}."
        raise ValueError(msg)
    if abs(lag) >= k:
        msg = f"The lag must satisfy |lag| < k = {k}, got {lag}."
        raise ValueError(msg)
    y = series.centered()[:k]
    if lag >= 0:
        # i = 1..k-lag, pairs (X_i, X_{i+lag})
        products = y[:k - lag] * y[lag:]
    else:
        # i = -lag+1..k, pairs (X_i, X_{i+lag})
        products = y[-lag:] * y[:k + lag]
    return math.fsum(products) / n


def lrv_path(series: Series, config: LrvConfig) -> np.ndarray:
    """
    Compute the partial-sample long-run variances g_{N,k} for k = 0..N.

    Every lag contributes a cumulative sum of lagged products, so the whole
    path costs O(N ceil(c h)). ``g_{N,0} = 0``.
    """
    n = series.n
    y = series.centered()
    path = np.zeros(n + 1)
    path[1:] = np.cumsum(y * y) / n
    for lag in range(1, min(config.max_lag, n - 1) + 1):
        weight = kernel_weight(config, lag / config.bandwidth)
        if weight == 0:
            continue
        # gamma_{k,lag} = (1/N) sum_{i <= k-lag} y_i y_{i+lag}, zero for k <= lag
        lagged = np.cumsum(y[:n - lag] * y[lag:]) / n
        path[lag + 1:] += 2.0 * weight * lagged
    return path


def lrv_partial(series: Series, k: int, config: LrvConfig) -> float:
    """
    The kernel long-run variance estimator g_{N,k} of X_1..X_k.

    Sums ``K(l/h) gamma_{k,l}`` over ``|l| <= min(k-1, ceil(c h))``. The raw
    value is returned; see :func:`floor_lrv` for the floored divisor.
    """
    n = series.n
    if not 1 <= k <= n:
        msg = f"The partial sample size must satisfy 1 <= k <= {n}, got {k}."
        raise ValueError(msg)
    total = autocov_partial(series, k, 0)
    for lag in range(1, min(k - 1, config.max_lag) + 1):
        weight = kernel_weight(config, lag / config.bandwidth)
        if weight != 0:
            total += 2.0 * weight * autocov_partial(series, k, lag)
    return total


def sample_variance(series: Series) -> float:
    """The sample variance with divisor N (exactly 0 for a constant series)."""
    y = series.centered()
    return math.fsum(y * y) / series.n


def floor_lrv(values: np.ndarray | float,
              series: Series) -> tuple[np.ndarray | float, int]:
    """
    Replace nonpositive long-run variances by 1e-12 times the sample variance.

    Returns
    -------
    floored, count
        The floored value(s) and the number of entries that were replaced.

    """
    epsilon = FLOOR_FACTOR * sample_variance(series)
    array = np.asarray(values, dtype=float)
    mask = array <= 0
    count = int(mask.sum())
    if count:
        log.warning(f"Floored {count} nonpositive long-run variance value(s) "
                    f"at {epsilon:.3g}.")
        array = np.where(mask, epsilon, array)
    if array.ndim == 0:
        return float(array), count
    return array, count
