"""Eigenvalues of covariance integral operators by the Nyström method."""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy import linalg

from hetcusum import log
from hetcusum.errors import EigenSolverError

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Sequence

    from hetcusum.kernels import CovKernel

SPECTRUM_SOURCES = {
    "theoretical",
    "empirical-uncorrelated",
    "empirical-correlated",
    "classical-CM",
    "classical-AD",
    "VS",
    "file",
}
CLIPPED_MASS_WARNING = 1e-3


@dataclass(frozen=True, eq=False)
class Spectrum:

    """
    Weights of a weighted chi-square law, sorted descending.

    Parameters
    ----------
    weights : np.ndarray
        The eigenvalues lambda_1 >= ... >= lambda_m >= 0.
    source : str
        Provenance of the weights (see ``SPECTRUM_SOURCES``).
    dof : int, default=1
        Degrees of freedom of every chi-square term.
    clipped_mass : float, default=0.0
        Total mass of the negative eigenvalues that were set to zero,
        relative to the positive mass.

    """

    weights: np.ndarray
    source: str = "theoretical"
    dof: int = 1
    clipped_mass: float = 0.0

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=float).ravel()
        if weights.size < 1:
            msg = "A spectrum needs at least one weight."
            raise ValueError(msg)
        if (weights < 0).any():
            msg = "Spectrum weights must be nonnegative."
            raise ValueError(msg)
        if (np.diff(weights) > 0).any():
            msg = "Spectrum weights must be sorted in descending order."
            raise ValueError(msg)
        if self.dof not in {1, 2}:
            msg = f"dof must be 1 or 2, got {self.dof}."
            raise ValueError(msg)
        if self.source not in SPECTRUM_SOURCES:
            msg = f"Unknown spectrum source '{self.source}'. "
            msg += f"Known sources are: {sorted(SPECTRUM_SOURCES)}."
            raise ValueError(msg)
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @property
    def m(self) -> int:
        """The number of weights."""
        return self.weights.size

    @property
    def mean(self) -> float:
        """Expectation of the weighted chi-square law."""
        return float(self.dof * self.weights.sum())

    def truncated(self, m: int) -> Spectrum:
        """Keep the m largest weights."""
        if not 1 <= m <= self.m:
            msg = f"m must satisfy 1 <= m <= {self.m}, got {m}."
            raise ValueError(msg)
        return Spectrum(self.weights[:m], self.source, self.dof, self.clipped_mass)

    def scaled(self, factor: float) -> Spectrum:
        """Multiply all weights by a nonnegative factor."""
        return Spectrum(self.weights * factor, self.source, self.dof,
                        self.clipped_mass)


def default_terms(weights: Sequence[float] | np.ndarray,
                  mass_fraction: float = 0.999,
                  max_terms: int = 100) -> int:
    """
    Smallest m whose leading weights carry ``mass_fraction`` of the total.

    Parameters
    ----------
    weights : array_like
        Nonnegative weights sorted descending.
    mass_fraction : float, default=0.999
        The share of the total positive mass to capture.
    max_terms : int, default=100
        Upper bound on m.

    """
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if total <= 0:
        return 1
    captured = np.cumsum(weights) / total
    # tolerate rounding in the cumulative sum
    m = int(np.searchsorted(captured, mass_fraction - 1e-12, side="left")) + 1
    return max(1, min(m, max_terms, weights.size))


def all_eigenvalues(kernel: CovKernel) -> tuple[np.ndarray, float]:
    """
    All G eigenvalues of M/G in descending order, clipped at zero.

    Returns
    -------
    eigenvalues, clipped_mass
        The clipped eigenvalues and the mass of the clipped negative part
        relative to the positive mass.

    """
    matrix = kernel.values / kernel.size
    try:
        values = linalg.eigvalsh(matrix, check_finite=True)
    except (linalg.LinAlgError, ValueError) as error:
        msg = f"The symmetric eigensolver failed on a {kernel.size}x"
        msg += f"{kernel.size} kernel: {error}"
        raise EigenSolverError(msg) from error
    values = values[::-1]
    negative = -values[values < 0].sum()
    positive = values[values > 0].sum()
    clipped_mass = float(negative / positive) if positive > 0 else 0.0
    return np.clip(values, 0.0, None), clipped_mass


def eigenvalues(kernel: CovKernel,
                m: int | None = None,
                *,
                mass_fraction: float = 0.999,
                max_terms: int = 100) -> Spectrum:
    """
    Approximate the eigenvalues of the integral operator with kernel M.

    Parameters
    ----------
    kernel : CovKernel
        The discretized kernel; uniform quadrature weights 1/G are used.
    m : int | None (optional)
        Number of eigenvalues to keep (1 <= m <= G). Default: chosen by
        :func:`default_terms`.
    mass_fraction, max_terms
        Settings of the automatic choice of m.

    Examples
    --------
    .. code-block:: python

        from hetcusum.kernels import VarianceProfile, theoretical_kernel
        from hetcusum.spectrum import eigenvalues

        bridge = theoretical_kernel(VarianceProfile(lambda t: 1.0), 1000)
        eigenvalues(bridge, 2).weights  # ~[0.1013, 0.0253]

    """
    if m is not None and not 1 <= m <= kernel.size:
        msg = f"m must satisfy 1 <= m <= G = {kernel.size}, got {m}."
        raise ValueError(msg)
    values, clipped_mass = all_eigenvalues(kernel)
    if clipped_mass > CLIPPED_MASS_WARNING:
        log.warning(f"Clipped negative eigenvalue mass of {clipped_mass:.3g} "
                    f"({kernel.source} kernel).")
    if m is None:
        m = default_terms(values, mass_fraction, max_terms)
        log.debug(f"Using m={m} eigenvalues of the {kernel.source} kernel.")
    return Spectrum(values[:m], source=kernel.source, clipped_mass=clipped_mass)
