"""Covariance kernels of the CUSUM limit process and their estimators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from hetcusum.lrv import floor_lrv, lrv_path
from hetcusum.series import _quad

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Callable, Sequence

    from hetcusum.lrv import LrvConfig
    from hetcusum.series import Series

MIN_THEORETICAL_GRID = 16
SYMMETRY_TOLERANCE = 1e-12


def midpoint_grid(size: int) -> np.ndarray:
    """The grid t_j = (j - 1/2)/G, j = 1..G."""
    if size < 1:
        msg = f"The grid size must be positive, got {size}."
        raise ValueError(msg)
    return (np.arange(1, size + 1) - 0.5) / size


# ================================================================
#  Kernel container
# ================================================================
@dataclass(frozen=True, eq=False)
class CovKernel:

    """
    A covariance kernel discretized on a grid of (0, 1).

    Parameters
    ----------
    grid : np.ndarray
        Strictly increasing evaluation points t_1 < ... < t_G.
    values : np.ndarray
        The symmetric G x G matrix M[j, k] = kernel(t_j, t_k).
    weighted : bool, default=False
        Whether the Anderson-Darling weighting has been applied.
    source : str, default="theoretical"
        Where the kernel comes from (used as spectrum provenance).

    """

    grid: np.ndarray
    values: np.ndarray
    weighted: bool = False
    source: str = "theoretical"
    floored: int = field(default=0)

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        size = grid.size
        if values.shape != (size, size):
            msg = f"A kernel on {size} grid points needs a {size}x{size} "
            msg += f"matrix, got shape {values.shape}."
            raise ValueError(msg)
        if size > 1 and not (np.diff(grid) > 0).all():
            msg = "The kernel grid must be strictly increasing."
            raise ValueError(msg)
        if size and (grid[0] < 0 or grid[-1] > 1):
            msg = "The kernel grid must lie in [0, 1]."
            raise ValueError(msg)
        if not np.allclose(values, values.T, rtol=0, atol=SYMMETRY_TOLERANCE):
            msg = "The kernel matrix must be symmetric."
            raise ValueError(msg)
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        """The number G of grid points."""
        return self.grid.size

    def scaled(self, factor: float) -> CovKernel:
        """Return the kernel multiplied by a constant."""
        return CovKernel(self.grid, self.values * factor, self.weighted,
                         self.source, self.floored)

    def to_csv(self, path: Path | str) -> None:
        """
        Write the kernel matrix to disk.

        A ``.npy`` suffix writes numpy's binary format; anything else writes
        a CSV file with a ``# G=<G> weighted=<0|1>`` header line followed by
        the matrix in row-major order.
        """
        path = Path(path)
        if path.suffix == ".npy":
            np.save(path, self.values)
            return
        header = f"G={self.size} weighted={int(self.weighted)}"
        np.savetxt(path, self.values, delimiter=",", header=header, fmt="%.17g")

    @classmethod
    def from_csv(cls, path: Path | str, source: str = "file") -> CovKernel:
        """Read a kernel written by :meth:`to_csv` (midpoint grid assumed)."""
        path = Path(path)
        if path.suffix == ".npy":
            values = np.load(path)
            weighted = False
        else:
            with Path.open(path) as file:
                header = file.readline().lstrip("# ").split()
            settings = dict(item.split("=") for item in header)
            weighted = bool(int(settings.get("weighted", 0)))
            values = np.loadtxt(path, delimiter=",", ndmin=2)
        return cls(midpoint_grid(values.shape[0]), values, weighted, source)


def _bridge_transform(path_at_grid: np.ndarray,
                      path_at_one: float,
                      grid: np.ndarray) -> np.ndarray:
    """Assemble F(t^s) - t F(s) - s F(t) + t s F(1) on a grid."""
    t = grid[:, None]
    s = grid[None, :]
    # F need not be monotone (g_N), so take F(t^s) by grid index
    index = np.minimum.outer(np.arange(grid.size), np.arange(grid.size))
    lower = path_at_grid[index]
    f_t = path_at_grid[:, None]
    f_s = path_at_grid[None, :]
    matrix = lower - t * f_s - s * f_t + t * s * path_at_one
    # mirror the upper triangle so the matrix is exactly symmetric
    return np.triu(matrix) + np.triu(matrix, 1).T


def covariance_from_path(path: np.ndarray, t: float, s: float) -> float:
    """
    Evaluate F(t^s) - t F(s) - s F(t) + s t F(1) with F(u) = path[floor(N u)].

    ``path`` holds the step function at k/N for k = 0..N.
    """
    n = path.size - 1

    def f(u: float) -> float:
        return float(path[min(math.floor(n * u + 1e-12), n)])

    return f(min(t, s)) - t * f(s) - s * f(t) + s * t * f(1.0)


# ================================================================
#  Theoretical kernel
# ================================================================
@dataclass(frozen=True)
class VarianceProfile:

    """
    The variance function of heteroskedastic errors u_i = a(i/N) e_i.

    Parameters
    ----------
    a : Callable[[float], float]
        The scale function on [0, 1] (piecewise continuous).
    sigma : float, default=1.0
        The long-run standard deviation of the errors e_i.
    jumps : tuple[float, ...]
        Points in (0, 1) where ``a`` jumps; passed to the quadrature.

    """

    a: Callable[[float], float] = field(compare=False)
    sigma: float = 1.0
    jumps: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            msg = f"sigma must be positive, got {self.sigma}."
            raise ValueError(msg)

    def clock(self, t: Sequence[float] | np.ndarray) -> np.ndarray:
        """The time change b(t) = sigma^2 * integral of a^2 over [0, t]."""
        points = np.atleast_1d(np.asarray(t, dtype=float))
        order = np.argsort(points)
        values = np.zeros(points.size)
        last_t, last_b = 0.0, 0.0

        def integrand(u: float) -> float:
            return self.a(u) ** 2

        for idx in order:
            upper = points[idx]
            inside = [j for j in self.jumps if last_t < j < upper] or None
            if upper > last_t:
                last_b += _quad(integrand, last_t, upper, points=inside)
            last_t = upper
            values[idx] = last_b
        return self.sigma**2 * values


def theoretical_covariance(profile: VarianceProfile, t: float, s: float) -> float:
    """C(t, s) = b(t^s) - t b(s) - s b(t) + t s b(1) at a single point."""
    b_min, b_t, b_s, b_one = profile.clock([min(t, s), t, s, 1.0])
    return float(b_min - t * b_s - s * b_t + t * s * b_one)


def theoretical_kernel(profile: VarianceProfile, size: int) -> CovKernel:
    """
    Discretize the limit covariance C(t, s) on the midpoint grid.

    Parameters
    ----------
    profile : VarianceProfile
        The scale function a and sigma.
    size : int
        Number G of grid points (at least 16).

    """
    if size < MIN_THEORETICAL_GRID:
        msg = f"The theoretical kernel needs at least {MIN_THEORETICAL_GRID} "
        msg += f"grid points, got {size}."
        raise ValueError(msg)
    grid = midpoint_grid(size)
    clock = profile.clock(np.append(grid, 1.0))
    matrix = _bridge_transform(clock[:-1], clock[-1], grid)
    return CovKernel(grid, matrix, source="theoretical")


# ================================================================
#  Empirical kernels
# ================================================================
def partial_variance_path(series: Series) -> np.ndarray:
    """H_N(k/N) = (1/N) sum_{i <= k} (X_i - mean)^2 for k = 0..N."""
    y = series.centered()
    path = np.zeros(series.n + 1)
    path[1:] = np.cumsum(y * y) / series.n
    return path


def _path_on_grid(path: np.ndarray, grid: np.ndarray) -> np.ndarray:
    n = path.size - 1
    index = np.minimum(np.floor(n * grid + 1e-12).astype(int), n)
    return path[index]


def empirical_kernel_uncorrelated(series: Series, size: int) -> CovKernel:
    """
    The estimator of C(t, s) for uncorrelated errors.

    H_N is evaluated exactly at floor(N t_j) on the midpoint grid.
    """
    grid = midpoint_grid(size)
    path = partial_variance_path(series)
    matrix = _bridge_transform(_path_on_grid(path, grid), path[-1], grid)
    return CovKernel(grid, matrix, source="empirical-uncorrelated")


def empirical_kernel_correlated(series: Series,
                                config: LrvConfig,
                                size: int) -> CovKernel:
    """
    The estimator of C(t, s) for correlated errors.

    The partial-sample long-run variances g_{N,k} are computed once for all
    k; nonpositive values (k >= 1) are floored, the count is stored in
    ``CovKernel.floored``.
    """
    grid = midpoint_grid(size)
    path = lrv_path(series, config)
    floored = 0
    if not series.is_constant:
        path[1:], floored = floor_lrv(path[1:], series)
    matrix = _bridge_transform(_path_on_grid(path, grid), path[-1], grid)
    return CovKernel(grid, matrix, source="empirical-correlated", floored=floored)


def ad_weight_kernel(kernel: CovKernel) -> CovKernel:
    """
    Apply the Anderson-Darling weighting.

    D(t, s) = C(t, s) / sqrt(t (1 - t) s (1 - s)).
    """
    if kernel.weighted:
        msg = "The kernel is already weighted."
        raise ValueError(msg)
    grid = kernel.grid
    if (grid <= 0).any() or (grid >= 1).any():
        msg = "The Anderson-Darling weighting needs a grid inside (0, 1)."
        raise ValueError(msg)
    scale = 1.0 / np.sqrt(grid * (1.0 - grid))
    matrix = kernel.values * np.outer(scale, scale)
    matrix = np.triu(matrix) + np.triu(matrix, 1).T
    return CovKernel(grid, matrix, weighted=True, source=kernel.source,
                     floored=kernel.floored)


# ================================================================
#  Diagnostics
# ================================================================
def scaled_kernel_limit(kernel: CovKernel, bandwidth: float) -> CovKernel:
    """C~_N / h, whose limit under a mean change is finite."""
    return kernel.scaled(1.0 / bandwidth)


def kernel_l2_norm(kernel: CovKernel) -> float:
    """The L2 norm of the kernel by the midpoint rule."""
    return float(np.sqrt(np.mean(kernel.values**2)))


def kernel_l2_distance(first: CovKernel, second: CovKernel) -> float:
    """The L2 distance of two kernels on the same grid."""
    if first.size != second.size:
        msg = f"Kernels live on different grids ({first.size} vs {second.size})."
        raise ValueError(msg)
    return float(np.sqrt(np.mean((first.values - second.values) ** 2)))
