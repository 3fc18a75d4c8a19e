"""Exceptions raised by hetcusum."""
from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:  # pragma: no cover
    import numpy as np


class DegenerateInputError(ValueError):

    """A variance divisor vanished, e.g. because the series is constant."""


class QuadratureError(RuntimeError):

    """Adaptive quadrature did not converge."""


class EigenSolverError(RuntimeError):

    """The symmetric eigensolver failed."""


class RankDeficiencyError(ValueError):

    """The regression design matrix is (numerically) rank deficient."""


class ConvergenceError(RuntimeError):

    """
    Gauss-Newton iterations stopped without meeting a convergence criterion.

    Parameters
    ----------
    msg : str
        Description of the failure.
    theta : np.ndarray
        The last iterate.
    iterations : int
        Number of iterations performed.

    """

    def __init__(self, msg: str, theta: np.ndarray, iterations: int) -> None:
        super().__init__(msg)
        self.theta = theta
        self.iterations = iterations


class GridConfigError(ValueError):

    """
    A simulation grid has no usable entries.

    Parameters
    ----------
    msg : str
        Description of the failure.
    problems : list[tuple[int, str]]
        ``(entry index, reason)`` for every rejected entry.

    """

    def __init__(self, msg: str,
                 problems: list[tuple[int, str]] | None = None) -> None:
        super().__init__(msg)
        self.problems = problems or []
