"""Least squares residuals as inputs of the change point tests."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Literal

import numpy as np
from scipy import linalg

from hetcusum import log
from hetcusum.errors import ConvergenceError, RankDeficiencyError

if TYPE_CHECKING:  # pragma: no cover
    from collections.abc import Callable, Sequence

    from hetcusum.series import Series

    Model = Callable[[np.ndarray, np.ndarray], np.ndarray]

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class RegressionSpec:

    """
    A linear or nonlinear mean model X_i = h(x_i, theta) + u_i.

    Use :meth:`linear` or :meth:`nonlinear` to construct one.

    Parameters
    ----------
    kind : "linear" | "nonlinear"
        The model type.
    design : np.ndarray | None
        The N x p design matrix (linear models).
    model : Callable | None
        ``model(x, theta)`` returning the N fitted values (nonlinear models).
    theta0 : tuple[float, ...]
        Starting point of the Gauss-Newton iterations.
    jacobian : Callable | None (optional)
        ``jacobian(x, theta)`` returning the N x p derivative of the model.
        Central finite differences are used when omitted.
    max_iter : int, default=200
        Maximal number of Gauss-Newton iterations.
    max_halvings : int, default=30
        Maximal number of step halvings per iteration.
    step_tol : float, default=1e-10
        Stop when the step norm falls below this value.
    decrease_tol : float, default=1e-12
        Stop when the relative decrease of the loss falls below this value.

    """

    kind: Literal["linear", "nonlinear"]
    design: np.ndarray | None = field(default=None, compare=False)
    model: Model | None = field(default=None, compare=False)
    theta0: tuple[float, ...] = ()
    jacobian: Model | None = field(default=None, compare=False)
    max_iter: int = 200
    max_halvings: int = 30
    step_tol: float = 1e-10
    decrease_tol: float = 1e-12

    def __post_init__(self) -> None:
        if self.kind == "linear":
            if self.design is None:
                msg = "A linear regression needs a design matrix."
                raise ValueError(msg)
            design = np.asarray(self.design, dtype=float)
            if design.ndim == 1:
                design = design[:, None]
            if not np.isfinite(design).all():
                msg = "The design matrix must be finite."
                raise ValueError(msg)
            object.__setattr__(self, "design", design)
        elif self.kind == "nonlinear":
            if self.model is None:
                msg = "A nonlinear regression needs a model function."
                raise ValueError(msg)
            if not self.theta0 or not all(math.isfinite(t) for t in self.theta0):
                msg = f"theta0 must be a nonempty finite vector, got {self.theta0}."
                raise ValueError(msg)
        else:
            msg = f"Unknown regression kind '{self.kind}'. "
            msg += "Supported kinds are: 'linear', 'nonlinear'."
            raise ValueError(msg)
        if self.max_iter < 1 or self.max_halvings < 0:
            msg = "max_iter must be positive and max_halvings nonnegative."
            raise ValueError(msg)

    @classmethod
    def linear(cls, design: np.ndarray) -> RegressionSpec:
        """X_i = x_i^T beta + u_i."""
        return cls("linear", design=design)

    @classmethod
    def nonlinear(cls,
                  model: Model,
                  theta0: Sequence[float],
                  jacobian: Model | None = None,
                  **tolerances: float) -> RegressionSpec:
        """X_i = model(x_i, theta) + u_i, fitted by Gauss-Newton."""
        return cls("nonlinear", model=model,
                   theta0=tuple(float(t) for t in theta0),
                   jacobian=jacobian, **tolerances)


def intercept_design(n: int, *covariates: np.ndarray) -> np.ndarray:
    """An intercept column followed by the given covariate columns."""
    columns = [np.ones(n), *(np.asarray(c, dtype=float) for c in covariates)]
    return np.column_stack(columns)


def ols_residuals(series: Series, design: np.ndarray) -> Series:
    """
    Residuals of the least squares fit of the series on a design matrix.

    Raises
    ------
    RankDeficiencyError
        If the condition number of the design exceeds 1e12.

    """
    design = np.asarray(design, dtype=float)
    if design.ndim == 1:
        design = design[:, None]
    if design.shape[0] != series.n:
        msg = f"The design has {design.shape[0]} rows, the series {series.n} "
        msg += "observations."
        raise ValueError(msg)
    if design.shape[1] >= series.n:
        msg = f"{design.shape[1]} regressors leave no residual degrees of "
        msg += f"freedom for N={series.n}."
        raise RankDeficiencyError(msg)
    condition = np.linalg.cond(design)
    if not condition <= MAX_CONDITION:
        msg = f"The design matrix is rank deficient (condition number {condition:.3g})."
        raise RankDeficiencyError(msg)
    beta, *_ = linalg.lstsq(design, series.values)
    log.debug(f"OLS coefficients: {np.round(beta, 6).tolist()}")
    return series.with_values(series.values - design @ beta)


def _finite_difference_jacobian(model: Model,
                                x: np.ndarray,
                                theta: np.ndarray) -> np.ndarray:
    """Central differences of the model with respect to theta."""
    columns = []
    for j in range(theta.size):
        step = 6e-6 * max(1.0, abs(theta[j]))
        up, down = theta.copy(), theta.copy()
        up[j] += step
        down[j] -= step
        columns.append((np.asarray(model(x, up)) - np.asarray(model(x, down)))
                       / (up[j] - down[j]))
    return np.column_stack(columns)


def _loss(model: Model, x: np.ndarray, y: np.ndarray, theta: np.ndarray) -> float:
    residuals = y - np.asarray(model(x, theta), dtype=float)
    value = float(np.dot(residuals, residuals))
    return value if math.isfinite(value) else math.inf


def fit_nonlinear(series: Series,
                  spec: RegressionSpec,
                  covariates: np.ndarray | None = None) -> np.ndarray:
    """
    Minimize the sum of squared residuals by damped Gauss-Newton.

    Returns
    -------
    np.ndarray
        The estimate of theta.

    Raises
    ------
    ConvergenceError
        If no stopping criterion is met within ``spec.max_iter`` iterations.

    """
    if spec.kind != "nonlinear":
        msg = "Gauss-Newton fitting needs a nonlinear regression spec."
        raise ValueError(msg)
    x = np.arange(1, series.n + 1) / series.n if covariates is None else covariates
    y = series.values
    theta = np.asarray(spec.theta0, dtype=float)
    loss = _loss(spec.model, x, y, theta)
    if not math.isfinite(loss):
        msg = f"The model is not finite at the starting point {theta.tolist()}."
        raise ConvergenceError(msg, theta, 0)

    for iteration in range(1, spec.max_iter + 1):
        if loss == 0:
            return theta
        residuals = y - np.asarray(spec.model(x, theta), dtype=float)
        if spec.jacobian is not None:
            jac = np.asarray(spec.jacobian(x, theta), dtype=float)
        else:
            jac = _finite_difference_jacobian(spec.model, x, theta)
        step, *_ = linalg.lstsq(jac.reshape(series.n, theta.size), residuals)
        if np.linalg.norm(step) < spec.step_tol:
            log.debug(f"Gauss-Newton converged after {iteration} iterations (step).")
            return theta

        # halve the step until the loss decreases
        candidate, new_loss = theta + step, _loss(spec.model, x, y, theta + step)
        halvings = 0
        while new_loss >= loss and halvings < spec.max_halvings:
            step = step / 2
            candidate = theta + step
            new_loss = _loss(spec.model, x, y, candidate)
            halvings += 1

        decrease = (loss - new_loss) / loss
        log.debug(f"Gauss-Newton iteration {iteration}: loss={new_loss:.6g}, "
                  f"halvings={halvings}")
        if new_loss < loss:
            theta, loss = candidate, new_loss
        if decrease < spec.decrease_tol or np.linalg.norm(step) < spec.step_tol:
            log.debug(f"Gauss-Newton converged after {iteration} iterations.")
            return theta

    msg = f"Gauss-Newton did not converge within {spec.max_iter} iterations."
    raise ConvergenceError(msg, theta, spec.max_iter)


def nls_residuals(series: Series,
                  spec: RegressionSpec,
                  covariates: np.ndarray | None = None) -> Series:
    """
    Residuals X_i - h(x_i, theta_hat) of a nonlinear least squares fit.

    Parameters
    ----------
    series : Series
        The observations X_i.
    spec : RegressionSpec
        A nonlinear spec.
    covariates : np.ndarray | None (optional)
        The x_i passed to the model. Default: the design points i/N.

    """
    x = np.arange(1, series.n + 1) / series.n if covariates is None else covariates
    theta = fit_nonlinear(series, spec, x)
    return series.with_values(series.values - np.asarray(spec.model(x, theta)))
