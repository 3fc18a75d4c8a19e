"""Monte Carlo sampling of weighted chi-square limit laws."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal

import numpy as np

from hetcusum import log
from hetcusum.config import MIN_REPLICATIONS
from hetcusum.spectrum import Spectrum

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Iterable

CHUNK_SIZE = 16_384


@dataclass(frozen=True, eq=False)
class LimitSample:

    """
    Sorted independent draws of a weighted chi-square law.

    Parameters
    ----------
    draws : np.ndarray
        The R draws in ascending order.
    seed : int
        The seed the draws were generated from.
    dof : int
        Degrees of freedom of every chi-square term.
    source : str
        Provenance of the spectrum the draws come from.
    terms : int | None
        Number of weights in that spectrum, if known.

    """

    draws: np.ndarray
    seed: int
    dof: int = 1
    source: str = "theoretical"
    terms: int | None = None

    def __post_init__(self) -> None:
        draws = np.sort(np.asarray(self.draws, dtype=float))
        draws.setflags(write=False)
        object.__setattr__(self, "draws", draws)

    @property
    def r(self) -> int:
        """The number R of draws."""
        return self.draws.size

    def quantiles(self, alphas: Iterable[float]) -> dict[float, float]:
        """Critical values for several levels, keyed by level."""
        return {float(alpha): critical_value(self, alpha) for alpha in alphas}


def _chunk(weights: np.ndarray, size: int, dof: int,
           seed_sequence: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(seed_sequence))
    if dof == 1:
        terms = rng.standard_normal((size, weights.size)) ** 2
    else:
        # chi^2(2) is exponential with mean 2
        terms = -2.0 * np.log1p(-rng.random((size, weights.size)))
    return terms @ weights


def sample_weighted_chisq(spectrum: Spectrum,
                          replications: int,
                          dof: int | None = None,
                          seed: int = 0) -> LimitSample:
    """
    Draw R independent copies of sum_i w_i Q_i with Q_i iid chi^2(dof).

    The draws are generated in chunks of ``CHUNK_SIZE``; chunk ``c`` uses the
    ``c``-th child of ``SeedSequence(seed)``, so the result depends only on
    (spectrum, R, dof, seed).

    Parameters
    ----------
    spectrum : Spectrum
        The weights w_i.
    replications : int
        The number R of draws (at least 1000).
    dof : int | None (optional)
        1 or 2. Defaults to ``spectrum.dof``.
    seed : int, default=0
        Seed of the generator.

    """
    dof = spectrum.dof if dof is None else dof
    if dof not in {1, 2}:
        msg = f"dof must be 1 or 2, got {dof}."
        raise ValueError(msg)
    if replications < MIN_REPLICATIONS:
        msg = f"At least {MIN_REPLICATIONS} replications are needed, "
        msg += f"got {replications}."
        raise ValueError(msg)
    weights = np.asarray(spectrum.weights, dtype=float)
    n_chunks = math.ceil(replications / CHUNK_SIZE)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [CHUNK_SIZE] * (n_chunks - 1)
    sizes.append(replications - CHUNK_SIZE * (n_chunks - 1))
    draws = np.concatenate([_chunk(weights, size, dof, child)
                            for size, child in zip(sizes, children, strict=True)])
    log.debug(f"Sampled {replications} draws of a {spectrum.m}-term "
              f"{spectrum.source} law (dof={dof}, seed={seed}).")
    return LimitSample(draws, seed=seed, dof=dof, source=spectrum.source,
                       terms=spectrum.m)


def critical_value(sample: LimitSample, alpha: float) -> float:
    """
    The smallest draw x with at most a share alpha of draws above it.

    Implemented as ``draws[ceil((1 - alpha) R) - 1]``.
    """
    if not 0 < alpha < 1:
        msg = f"alpha must lie in (0, 1), got {alpha}."
        raise ValueError(msg)
    index = math.ceil((1.0 - alpha) * sample.r - 1e-9) - 1
    return float(sample.draws[max(index, 0)])


def p_value(sample: LimitSample,
            observed: float,
            *,
            correction: bool = False) -> float:
    """
    Share of draws strictly above ``observed``.

    With ``correction=True`` returns ``(1 + #exceedances) / (R + 1)``.
    """
    if observed < 0:
        msg = f"The observed statistic must be nonnegative, got {observed}."
        raise ValueError(msg)
    exceed = sample.r - int(np.searchsorted(sample.draws, observed, side="right"))
    if correction:
        return (1 + exceed) / (sample.r + 1)
    return exceed / sample.r


def classical_limit_spectrum(functional: Literal["CM", "AD"], m: int) -> Spectrum:
    """
    Weights of the Brownian bridge functionals.

    CM: 1/(k^2 pi^2); AD: 1/(k(k+1)), k = 1..m.
    """
    if m < 1:
        msg = f"m must be positive, got {m}."
        raise ValueError(msg)
    k = np.arange(1, m + 1, dtype=float)
    if functional == "CM":
        return Spectrum(1.0 / (k**2 * np.pi**2), source="classical-CM")
    if functional == "AD":
        return Spectrum(1.0 / (k * (k + 1.0)), source="classical-AD")
    msg = f"Unknown functional '{functional}'. Supported are: 'CM', 'AD'."
    raise ValueError(msg)


def vs_limit_spectrum(m: int) -> Spectrum:
    """Weights 1/(4 pi^2 k^2) of the VS law, with chi^2(2) terms."""
    if m < 1:
        msg = f"m must be positive, got {m}."
        raise ValueError(msg)
    k = np.arange(1, m + 1, dtype=float)
    return Spectrum(1.0 / (4.0 * np.pi**2 * k**2), source="VS", dof=2)
