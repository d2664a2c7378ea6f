"""Levenberg-Marquardt for small dense nonlinear least-squares problems.

The cost is the plain sum of squared residuals ``r(x) @ r(x)``. Steps solve
``(J^T J + lam * diag(J^T J)) dx = -J^T r`` through an SVD-based least-squares
solve of the equivalent augmented system, and ``lam`` follows the classic
schedule: divide by 10 after an accepted step, multiply by 10 after a
rejected one.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidStart, NonFiniteJacobian

__all__ = [
    "LeastSquaresProblem",
    "SolverOptions",
    "SolverReport",
    "Termination",
    "jacobian",
    "solve_lm",
]

FD_EPS = 1e-7
MAX_DAMPING = 1e12


class Termination(enum.Enum):
    FN_TOL = "FnTol"
    PARAM_TOL = "ParamTol"
    GRAD_TOL = "GradTol"
    MAX_ITER = "MaxIter"
    STALLED = "Stalled"


@dataclass
class LeastSquaresProblem:
    residual_fn: Callable[[np.ndarray], np.ndarray]
    initial_params: np.ndarray

    def __post_init__(self):
        self.initial_params = np.array(self.initial_params, dtype=float).reshape(-1)


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 1000
    fn_tolerance: float = 1e-12
    param_tolerance: float = 1e-12
    gradient_tolerance: float = 1e-12
    initial_damping: float = 1e-3

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        for name in ("fn_tolerance", "param_tolerance", "gradient_tolerance", "initial_damping"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class SolverReport:
    final_cost: float
    iterations: int
    termination: Termination
    cost_trace: list = field(default_factory=list)

    @property
    def initial_cost(self) -> float:
        return self.cost_trace[0]


def _as_problem(problem, x0=None):
    if isinstance(problem, LeastSquaresProblem):
        return problem.residual_fn, problem.initial_params if x0 is None else np.asarray(x0, float)
    return problem, np.asarray(x0, dtype=float)


def jacobian(problem, params=None, r0=None) -> np.ndarray:
    """Forward-difference Jacobian with steps ``1e-7 * max(|x_i|, 1)``.

    ``problem`` is a :class:`LeastSquaresProblem` or a bare residual function.
    A column whose forward perturbation is non-finite is retried with a
    backward difference.
    """
    fun, x = _as_problem(problem, params)
    x = np.array(x, dtype=float)
    r0 = fun(x) if r0 is None else r0
    jac = np.empty((r0.size, x.size))
    for i in range(x.size):
        h = FD_EPS * max(abs(x[i]), 1.0)
        xp = x.copy()
        xp[i] += h
        h = xp[i] - x[i]
        col = (fun(xp) - r0) / h
        if not np.all(np.isfinite(col)):
            xp[i] = x[i] - h
            col = (r0 - fun(xp)) / h
            if not np.all(np.isfinite(col)):
                raise NonFiniteJacobian(f"residuals are non-finite on both sides of parameter {i}")
        jac[:, i] = col
    return jac


def _damped_step(jac, r, lam, diag):
    p = jac.shape[1]
    aug = np.vstack([jac, np.diag(np.sqrt(lam * diag))])
    rhs = np.concatenate([-r, np.zeros(p)])
    step, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
    return step


def solve_lm(problem, options: SolverOptions | None = None, x0=None):
    """Minimize ``sum(r(x)**2)``. Returns ``(params, SolverReport)``."""
    options = options or SolverOptions()
    fun, x = _as_problem(problem, x0)
    x = np.array(x, dtype=float)
    r = np.asarray(fun(x), dtype=float)
    if not np.all(np.isfinite(r)):
        raise InvalidStart("residuals are not finite at the initial parameters")
    cost = float(r @ r)
    trace = [cost]
    lam = options.initial_damping
    jac = jacobian(fun, x, r)
    termination = Termination.MAX_ITER
    iterations = 0

    while iterations < options.max_iterations:
        grad = jac.T @ r
        if cost == 0.0 or np.max(np.abs(grad)) <= options.gradient_tolerance:
            termination = Termination.GRAD_TOL
            break
        diag = np.einsum("ij,ij->j", jac, jac)
        diag = np.maximum(diag, 1e-12 * max(diag.max(), 1e-300))

        accepted = False
        while True:
            step = _damped_step(jac, r, lam, diag)
            # reductions in factored form: differencing two nearly equal
            # sums of squares loses the last digits near the optimum
            js = jac @ step
            predicted = -float(js @ (2.0 * r + js))
            if predicted <= 0.0:
                termination = Termination.FN_TOL
                break
            x_new = x + step
            r_new = np.asarray(fun(x_new), dtype=float)
            if np.all(np.isfinite(r_new)):
                cost_new = float(r_new @ r_new)
                actual = float((r - r_new) @ (r + r_new))
            else:
                cost_new, actual = np.inf, -np.inf
            if actual > 0.0 and cost_new <= cost:
                accepted = True
                lam = max(lam / 10.0, 1e-300)
                break
            if predicted <= options.fn_tolerance * cost:
                # the model promises nothing measurable and the step failed
                termination = Termination.FN_TOL
                break
            lam *= 10.0
            if lam > MAX_DAMPING:
                termination = Termination.STALLED
                break
        if not accepted:
            break

        iterations += 1
        decrease = actual
        step_norm = float(np.linalg.norm(step))
        x_norm = float(np.linalg.norm(x))
        x, r, cost = x_new, r_new, cost_new
        trace.append(cost)
        if decrease <= options.fn_tolerance * trace[-2]:
            termination = Termination.FN_TOL
            break
        if step_norm <= options.param_tolerance * (x_norm + options.param_tolerance):
            termination = Termination.PARAM_TOL
            break
        jac = jacobian(fun, x, r)

    return x, SolverReport(final_cost=cost, iterations=iterations, termination=termination, cost_trace=trace)
