"""Configuration of the test procedures."""
from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass
from typing import Literal

SEED_ENVIRONMENT_VARIABLE = "HETCUSUM_SEED"
DEFAULT_ALPHAS = (0.10, 0.05, 0.01)
MAX_GRID_SIZE = 256
MIN_REPLICATIONS = 1000


def default_seed(seed: int | None = None) -> int:
    """Return ``seed``, else the value of HETCUSUM_SEED, else 0."""
    if seed is not None:
        return int(seed)
    value = os.environ.get(SEED_ENVIRONMENT_VARIABLE)
    if value is None or not value.strip():
        return 0
    try:
        return int(value)
    except ValueError:
        msg = f"{SEED_ENVIRONMENT_VARIABLE} must be an integer, got '{value}'."
        raise ValueError(msg) from None


@dataclass(frozen=True)
class TestConfig:

    """
    All knobs of the test procedures.

    Parameters
    ----------
    grid_size : int | None
        Number G of midpoint grid points of the covariance kernels.
        Default: ``min(N, 256)``.
    n_terms : int | None
        Number m of eigenvalues used for the empirical limit laws. Default:
        the smallest m capturing ``mass_fraction`` of the positive
        eigenvalue mass, at most ``max_terms``.
    mass_fraction : float, default=0.999
        Mass captured by the automatic choice of m.
    max_terms : int, default=100
        Upper bound of the automatic choice of m.
    classical_terms : int, default=200
        Number of terms of the classical and VS limit spectra.
    kernel : "bartlett" | "parzen" | "custom", default="bartlett"
        Lag window of the long-run variance estimator.
    kernel_table : tuple | None
        ``(u, K(u))`` rows of a custom lag window.
    bandwidth : float | None
        Window parameter h. Default: ``floor(N^{1/3})``.
    replications : int, default=10000
        Number R of Monte Carlo draws of the limit law (at least 1000).
    alphas : tuple[float, ...], default=(0.10, 0.05, 0.01)
        Levels at which critical values are reported.
    p_value_correction : bool, default=False
        Use (1 + #exceedances)/(R + 1) instead of #exceedances/R.
    ad_variant : "standard" | "tied_down", default="standard"
        Anderson-Darling integral over [1/N, 1-1/N] of the standard CUSUM
        process, or over (0, 1) of the tied-down process.

    Examples
    --------
    .. code-block:: python

        from hetcusum import TestConfig

        config = TestConfig(replications=100_000, bandwidth=8)
        config.resolve(512)["grid_size"]  # 256

    """

    __test__ = False  # not a pytest test class

    grid_size: int | None = None
    n_terms: int | None = None
    mass_fraction: float = 0.999
    max_terms: int = 100
    classical_terms: int = 200
    kernel: Literal["bartlett", "parzen", "custom"] = "bartlett"
    kernel_table: tuple[tuple[float, float], ...] | None = None
    bandwidth: float | None = None
    replications: int = 10_000
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    p_value_correction: bool = False
    ad_variant: Literal["standard", "tied_down"] = "standard"

    def __post_init__(self) -> None:
        problems = []
        if self.grid_size is not None and self.grid_size < 1:
            problems.append(f"grid_size must be positive, got {self.grid_size}")
        if self.n_terms is not None and self.n_terms < 1:
            problems.append(f"n_terms must be positive, got {self.n_terms}")
        if not 0 < self.mass_fraction <= 1:
            problems.append(f"mass_fraction must lie in (0, 1], got {self.mass_fraction}")
        if self.max_terms < 1 or self.classical_terms < 1:
            problems.append("max_terms and classical_terms must be positive")
        if self.replications < MIN_REPLICATIONS:
            problems.append(f"replications must be at least {MIN_REPLICATIONS}, "
                            f"got {self.replications}")
        if not self.alphas or not all(0 < a < 1 for a in self.alphas):
            problems.append(f"alphas must lie in (0, 1), got {self.alphas}")
        if self.ad_variant not in {"standard", "tied_down"}:
            problems.append(f"unknown ad_variant '{self.ad_variant}'")
        if problems:
            msg = "Invalid test configuration: " + "; ".join(problems) + "."
            raise ValueError(msg)
        object.__setattr__(self, "alphas",
                           tuple(sorted((float(a) for a in self.alphas), reverse=True)))

    def replace(self, **changes: object) -> TestConfig:
        """Return a copy with some fields changed."""
        return dataclasses.replace(self, **changes)

    def resolve(self, n: int) -> dict[str, object]:
        """
        Resolve the defaults for a series of length n.

        Returns
        -------
        dict
            Every knob with its effective value, in a fixed order.

        """
        bandwidth = self.bandwidth
        if bandwidth is None:
            bandwidth = max(1, math.floor(n ** (1 / 3) + 1e-9))
        return {
            "grid_size": self.grid_size or min(n, MAX_GRID_SIZE),
            "n_terms": self.n_terms,
            "mass_fraction": self.mass_fraction,
            "max_terms": self.max_terms,
            "classical_terms": self.classical_terms,
            "kernel": self.kernel,
            "kernel_table": (None if self.kernel_table is None
                             else [[float(u), float(k)] for u, k in self.kernel_table]),
            "bandwidth": float(bandwidth),
            "replications": self.replications,
            "alphas": list(self.alphas),
            "p_value_correction": self.p_value_correction,
            "ad_variant": self.ad_variant,
        }
