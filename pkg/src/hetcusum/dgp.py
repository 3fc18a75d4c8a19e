"""Data-generating processes of the simulation study."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Literal

import numpy as np
from scipy import signal

from hetcusum import log
from hetcusum.kernels import VarianceProfile
from hetcusum.series import MeanSpec, Series

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Callable

    SeedLike = int | np.random.SeedSequence

BURN_IN = 1000
CENTERING_DRAWS = 1_000_000
CENTERING_SEED = 20_240_607
BASES = ("gaussian_iid", "ar1", "garch", "garch_abs", "garch_sq")
PROFILES = ("none", "a1", "a2", "a3", "a4", "sin")


# ================================================================
#  Base processes
# ================================================================
def gen_gaussian(n: int, seed: SeedLike = 0) -> Series:
    """iid N(0, 1) observations."""
    rng = np.random.default_rng(seed)
    return Series(rng.standard_normal(n))


def _check_ar1(rho: float) -> None:
    if not abs(rho) < 1:
        msg = f"An AR(1) process needs |rho| < 1, got rho={rho}."
        raise ValueError(msg)


def gen_ar1(n: int, rho: float, seed: SeedLike = 0) -> Series:
    """
    Y_i = rho Y_{i-1} + e_i with iid N(0, 1) innovations.

    The recursion starts from a draw of the stationary law and discards a
    burn-in of 1000 values.
    """
    _check_ar1(rho)
    rng = np.random.default_rng(seed)
    start = rng.standard_normal() / math.sqrt(1.0 - rho**2)
    innovations = rng.standard_normal(n + BURN_IN)
    values, _ = signal.lfilter([1.0], [1.0, -rho], innovations, zi=[rho * start])
    return Series(values[BURN_IN:])


def _check_garch(omega: float, alpha: float, beta: float) -> None:
    problems = []
    if not omega > 0:
        problems.append(f"omega must be positive, got {omega}")
    if alpha < 0 or beta < 0:
        problems.append(f"alpha and beta must be nonnegative, got {alpha}, {beta}")
    if not alpha + beta < 1:
        problems.append(f"alpha + beta must be below 1, got {alpha + beta}")
    if problems:
        msg = "Invalid GARCH(1,1) parameters: " + "; ".join(problems) + "."
        raise ValueError(msg)


def _garch_path(length: int, omega: float, alpha: float, beta: float,
                rng: np.random.Generator) -> np.ndarray:
    shocks = rng.standard_normal(length).tolist()
    values = np.empty(length)
    variance = omega / (1.0 - alpha - beta)
    previous = 0.0
    for i, shock in enumerate(shocks):
        if i:
            variance = omega + alpha * previous * previous + beta * variance
        previous = math.sqrt(variance) * shock
        values[i] = previous
    return values


def gen_garch(n: int, omega: float, alpha: float, beta: float,
              seed: SeedLike = 0) -> Series:
    """
    A GARCH(1,1) series R_i = sigma_i e_i.

    ``sigma_i^2 = omega + alpha R_{i-1}^2 + beta sigma_{i-1}^2``, started at the
    stationary variance ``omega / (1 - alpha - beta)`` with a burn-in of 1000.
    """
    _check_garch(omega, alpha, beta)
    rng = np.random.default_rng(seed)
    return Series(_garch_path(n + BURN_IN, omega, alpha, beta, rng)[BURN_IN:])


@dataclass(frozen=True)
class CenteringConstants:

    """E|R_0| and E R_0^2 of a stationary GARCH(1,1) process."""

    mean_abs: float
    mean_square: float
    seed: int
    draws: int


@functools.lru_cache(maxsize=32)
def garch_centering(omega: float, alpha: float, beta: float,
                    draws: int = CENTERING_DRAWS,
                    seed: int = CENTERING_SEED) -> CenteringConstants:
    """
    Centering constants of the transformed GARCH errors.

    E|R_0| has no closed form and is estimated from one long path (cached
    per parameter triple); E R_0^2 is the stationary variance.
    """
    _check_garch(omega, alpha, beta)
    rng = np.random.default_rng(seed)
    path = _garch_path(draws + BURN_IN, omega, alpha, beta, rng)[BURN_IN:]
    constants = CenteringConstants(
        mean_abs=float(np.mean(np.abs(path))),
        mean_square=omega / (1.0 - alpha - beta),
        seed=seed,
        draws=draws,
    )
    log.debug(f"GARCH centering for ({omega}, {alpha}, {beta}): "
              f"E|R|={constants.mean_abs:.6g} (seed {seed}).")
    return constants


# ================================================================
#  Variance profiles
# ================================================================
def _a1(t: float) -> float:
    return t / 2.0


def _a2(t: float) -> float:
    return 0.25 if t <= 0.5 else 0.5  # noqa: PLR2004


def _a3(t: float) -> float:
    return 1.0 + 3.0 * (t > 0.5)  # noqa: PLR2004


def _a4(t: float) -> float:
    return 1.0 - 0.75 * (t > 0.5)  # noqa: PLR2004


def _sin(t: float) -> float:
    return math.sin(math.pi * t)


def _none(_: float) -> float:
    return 1.0


_PROFILE_FUNCTIONS: dict[str, Callable[[float], float]] = {
    "none": _none, "a1": _a1, "a2": _a2, "a3": _a3, "a4": _a4, "sin": _sin,
}
_PROFILE_JUMPS = {"a2": (0.5,), "a3": (0.5,), "a4": (0.5,)}


def profile_function(name: str) -> Callable[[float], float]:
    """The scale function a(t) on [0, 1] of a named profile."""
    if name not in _PROFILE_FUNCTIONS:
        msg = f"Unknown profile '{name}'. Supported profiles are: {list(PROFILES)}."
        raise ValueError(msg)
    return _PROFILE_FUNCTIONS[name]


def profile_values(name: str, n: int) -> np.ndarray:
    """The multipliers a_i = a(i/N), i = 1..N."""
    func = profile_function(name)
    return np.array([func(i / n) for i in range(1, n + 1)])


def variance_profile(name: str, sigma: float = 1.0) -> VarianceProfile:
    """The VarianceProfile matching a named profile."""
    return VarianceProfile(profile_function(name), sigma=sigma,
                           jumps=_PROFILE_JUMPS.get(name, ()))


# ================================================================
#  Specifications
# ================================================================
def _mean_from_dict(data: dict[str, Any] | None) -> MeanSpec:
    if not data:
        return MeanSpec.constant()
    kind = data.get("kind", "constant")
    if kind == "constant":
        return MeanSpec.constant(data.get("level", 0.0))
    if kind == "single_change":
        levels = data.get("levels", [0.0, data.get("shift", 0.0)])
        return MeanSpec.single_change(data.get("theta", 0.5), *levels)
    if kind == "multi_change":
        return MeanSpec.multi_change(data["breakpoints"], data["levels"])
    msg = f"Unknown mean kind '{kind}'. "
    msg += "Supported kinds are: 'constant', 'single_change', 'multi_change'."
    raise ValueError(msg)


def _mean_label(mean: MeanSpec) -> str:
    if mean.kind == "constant":
        return f"mu={mean.levels[0]:g}"
    points = ",".join(f"{b:g}" for b in mean.breakpoints)
    levels = ",".join(f"{v:g}" for v in mean.levels)
    return f"mu={mean.kind}[{points};{levels}]"


@dataclass(frozen=True)
class DgpSpec:

    """
    A data-generating process X_i = mu_i + a_i e_i.

    Parameters
    ----------
    base : str
        ``gaussian_iid``, ``ar1``, ``garch`` (e_i = R_i), ``garch_abs``
        (e_i = |R_i| - E|R_0|) or ``garch_sq`` (e_i = R_i^2 - E R_0^2).
    profile : str, default="none"
        The multipliers a_i: ``none``, ``a1``, ``a2``, ``a3``, ``a4`` or ``sin``.
    mean : MeanSpec
        The mean sequence mu_i. Default: constant 0.
    n : int, default=512
        The sample size.
    rho : float, default=0.5
        AR(1) coefficient.
    omega, alpha, beta : float
        GARCH(1,1) parameters (default 1e-6, 0.2, 0.5).

    Examples
    --------
    .. code-block:: python

        from hetcusum.dgp import DgpSpec

        spec = DgpSpec.from_dict({"base": "garch", "profile": "a1"})
        series = spec.generate(seed=1)

    """

    base: Literal["gaussian_iid", "ar1", "garch", "garch_abs", "garch_sq"]
    profile: str = "none"
    mean: MeanSpec = field(default_factory=MeanSpec.constant)
    n: int = 512
    rho: float = 0.5
    omega: float = 1e-6
    alpha: float = 0.2
    beta: float = 0.5

    def __post_init__(self) -> None:
        if self.base not in BASES:
            msg = f"Unknown base process '{self.base}'. "
            msg += f"Supported bases are: {list(BASES)}."
            raise ValueError(msg)
        profile_function(self.profile)
        if self.n < 4:  # noqa: PLR2004
            msg = f"The sample size must be at least 4, got {self.n}."
            raise ValueError(msg)
        if self.base == "ar1":
            _check_ar1(self.rho)
        if self.base.startswith("garch"):
            _check_garch(self.omega, self.alpha, self.beta)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> DgpSpec:
        """Build a spec from a (TOML) table."""
        known = {"base", "profile", "mean", "n", "rho", "omega", "alpha", "beta"}
        unknown = set(data) - known
        if unknown:
            msg = f"Unknown DGP keys {sorted(unknown)}. "
            msg += f"Known keys are: {sorted(known)}."
            raise ValueError(msg)
        if "base" not in data:
            msg = "A DGP needs a 'base' process."
            raise ValueError(msg)
        kwargs = {key: value for key, value in data.items() if key != "mean"}
        return cls(mean=_mean_from_dict(data.get("mean")), **kwargs)

    def with_n(self, n: int) -> DgpSpec:
        """The same process with another sample size."""
        return replace(self, n=n)

    @property
    def label(self) -> str:
        """A stable name of the process without the sample size."""
        if self.base == "ar1":
            base = f"ar1(rho={self.rho:g})"
        elif self.base.startswith("garch"):
            base = f"{self.base}(omega={self.omega:g},alpha={self.alpha:g},"
            base += f"beta={self.beta:g})"
        else:
            base = self.base
        return f"{base}|{self.profile}|{_mean_label(self.mean)}"

    def base_series(self, seed: SeedLike = 0) -> Series:
        """The base process R_i or Y_i, before any transformation."""
        if self.base == "gaussian_iid":
            return gen_gaussian(self.n, seed)
        if self.base == "ar1":
            return gen_ar1(self.n, self.rho, seed)
        return gen_garch(self.n, self.omega, self.alpha, self.beta, seed)

    def generate(self, seed: SeedLike = 0) -> Series:
        """Draw one series X_1..X_N."""
        return apply_profile(self.base_series(seed), self)


def apply_profile(base: Series, spec: DgpSpec) -> Series:
    """
    Turn a base series into X_i = mu_i + a_i e_i.

    e_i is the base value itself, or the centered absolute value or square
    for the ``garch_abs`` and ``garch_sq`` bases.
    """
    errors = np.asarray(base.values, dtype=float)
    if spec.base in {"garch_abs", "garch_sq"}:
        constants = garch_centering(spec.omega, spec.alpha, spec.beta)
        if spec.base == "garch_abs":
            errors = np.abs(errors) - constants.mean_abs
        else:
            errors = errors**2 - constants.mean_square
    values = spec.mean.means(base.n) + profile_values(spec.profile, base.n) * errors
    return Series(values, name=base.name)
