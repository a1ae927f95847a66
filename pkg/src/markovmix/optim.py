"""Numerical optimization toolkit for the model estimators.

Maximization conventions throughout: callers pass the objective to be
maximized; minimization happens internally.  Contents:

  - numeric_gradient / numeric_hessian: central differences
  - project_simplex: Euclidean projection onto the probability simplex
  - maximize_unconstrained: newton-raphson | bfgs | nelder-mead
  - maximize_auglag: Augmented Lagrangian for equality + inequality
    constrained maximization

Default tolerances: gradient/KKT 1e-6, equality constraints 1e-6,
iteration caps 500 (inner) / 50 (outer), penalty growth 10 from an
initial penalty of 1.  Line searches backtrack with the Armijo
condition (contraction 0.5, slope factor 1e-4); a non-finite objective
during a line search shrinks the step instead of failing, so log(0)
near a boundary is survivable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.optimize

from .exceptions import EstimationError

GRAD_TOL = 1e-6
EQ_TOL = 1e-6
INEQ_TOL = 1e-8
MAX_INNER_ITER = 500
MAX_OUTER_ITER = 50
PENALTY_GROWTH = 10.0
INITIAL_PENALTY = 1.0
ARMIJO_SLOPE = 1e-4
BACKTRACK = 0.5

_METHODS = ("newton-raphson", "bfgs", "nelder-mead")


@dataclass
class OptimResult:
    argmax: np.ndarray
    value: float
    converged: bool
    iterations: int
    gradient: Optional[np.ndarray] = None
    hessian: Optional[np.ndarray] = None
    message: str = ""


@dataclass
class ConstraintSet:
    """Equality constraints h(x) = 0 and inequality constraints g(x) >= 0.

    Jacobians are optional; when omitted they are approximated by
    central differences.
    """

    equalities: list[Callable[[np.ndarray], float]] = field(default_factory=list)
    inequalities: list[Callable[[np.ndarray], float]] = field(default_factory=list)
    equality_jacobians: Optional[list[Callable[[np.ndarray], np.ndarray]]] = None
    inequality_jacobians: Optional[list[Callable[[np.ndarray], np.ndarray]]] = None

    def eq_values(self, x: np.ndarray) -> np.ndarray:
        return np.array([h(x) for h in self.equalities], dtype=float)

    def ineq_values(self, x: np.ndarray) -> np.ndarray:
        return np.array([g(x) for g in self.inequalities], dtype=float)

    def eq_jacobian(self, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
        if self.equality_jacobians is not None:
            return np.array([jac(x) for jac in self.equality_jacobians], dtype=float)
        return np.array([numeric_gradient(fn, x, h) for fn in self.equalities])

    def ineq_jacobian(self, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
        if self.inequality_jacobians is not None:
            return np.array([jac(x) for jac in self.inequality_jacobians], dtype=float)
        return np.array([numeric_gradient(fn, x, h) for fn in self.inequalities])

    def violation(self, x: np.ndarray) -> float:
        v = 0.0
        if self.equalities:
            v = max(v, float(np.max(np.abs(self.eq_values(x)))))
        if self.inequalities:
            v = max(v, float(np.max(np.maximum(0.0, -self.ineq_values(x)))))
        return v


def numeric_gradient(f: Callable, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient with absolute step h per coordinate."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        f_plus, f_minus = f(x + step), f(x - step)
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise EstimationError(f"non-finite objective in gradient stencil at coordinate {i}")
        grad[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


def numeric_hessian(f: Callable, x: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian, symmetrized as (H + H') / 2."""
    x = np.asarray(x, dtype=float)
    p = x.size
    hess = np.empty((p, p))
    f0 = f(x)
    if not np.isfinite(f0):
        raise EstimationError("non-finite objective at the Hessian expansion point")
    for i in range(p):
        ei = np.zeros(p)
        ei[i] = h
        hess[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / (h * h)
        for j in range(i + 1, p):
            ej = np.zeros(p)
            ej[j] = h
            vals = [f(x + ei + ej), f(x + ei - ej), f(x - ei + ej), f(x - ei - ej)]
            if not np.all(np.isfinite(vals)):
                raise EstimationError(
                    f"non-finite objective in Hessian stencil at coordinates ({i}, {j})"
                )
            hess[i, j] = hess[j, i] = (vals[0] - vals[1] - vals[2] + vals[3]) / (4.0 * h * h)
    if not np.all(np.isfinite(hess)):
        raise EstimationError("non-finite objective in Hessian stencil")
    return 0.5 * (hess + hess.T)


def project_simplex(v: Sequence[float]) -> np.ndarray:
    """Euclidean projection onto {w : w >= 0, sum(w) = 1}.

    Sort-based algorithm; idempotent, and exact on already-feasible
    points.
    """
    v = np.asarray(v, dtype=float)
    if not np.isfinite(v).all():
        raise ValueError("cannot project a non-finite point")
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u + (1.0 - css) / idx > 0)[0][-1]
    tau = (1.0 - css[rho]) / (rho + 1.0)
    return np.maximum(v + tau, 0.0)


def maximize_unconstrained(
    f: Callable[[np.ndarray], float],
    start: Sequence[float],
    method: str = "bfgs",
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    gtol: float = GRAD_TOL,
    max_iter: int = MAX_INNER_ITER,
    fd_step: float = 1e-6,
    compute_hessian: bool = False,
    extra_starts: Optional[Sequence[Sequence[float]]] = None,
) -> OptimResult:
    """Maximize f from a starting point with the chosen method.

    The likelihoods this serves are not globally concave, so the start
    matters; ``extra_starts`` runs the same method from additional
    points and keeps the best value (off unless supplied).
    """
    if method not in _METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {_METHODS}")
    starts = [np.asarray(start, dtype=float)]
    if extra_starts:
        starts.extend(np.asarray(s, dtype=float) for s in extra_starts)

    best: Optional[OptimResult] = None
    for x0 in starts:
        if not np.isfinite(f(x0)):
            raise EstimationError("objective is not finite at the starting point")
        if method == "nelder-mead":
            result = _neldermead_max(f, x0, max_iter)
        else:
            result = _gradient_method_max(f, x0, method, gradient, gtol, max_iter, fd_step)
        if best is None or result.value > best.value:
            best = result
    assert best is not None
    if compute_hessian:
        best.hessian = numeric_hessian(f, best.argmax)
    return best


def _neldermead_max(f, x0, max_iter) -> OptimResult:
    res = scipy.optimize.minimize(
        lambda x: -f(x),
        x0,
        method="Nelder-Mead",
        options={
            "xatol": 1e-9,
            "fatol": 1e-12,
            "maxiter": max(max_iter, 200 * x0.size),
            "maxfev": max(10 * max_iter, 400 * x0.size),
        },
    )
    return OptimResult(
        argmax=np.asarray(res.x, dtype=float),
        value=-float(res.fun),
        converged=bool(res.success),
        iterations=int(res.nit),
        message=str(res.message),
    )


def _gradient_method_max(f, x0, method, gradient, gtol, max_iter, fd_step) -> OptimResult:
    """Newton-Raphson / BFGS core, run as minimization of -f."""
    grad_f = gradient if gradient is not None else (lambda x: numeric_gradient(f, x, fd_step))

    def neg_f(x):
        return -f(x)

    x = x0.copy()
    fval = neg_f(x)
    g = -grad_f(x)  # gradient of -f
    p = x.size
    h_inv = np.eye(p)

    converged = False
    iterations = 0
    message = "iteration cap reached"
    for _ in range(max_iter):
        if np.max(np.abs(g)) <= gtol:
            converged = True
            message = "gradient norm below tolerance"
            break
        iterations += 1

        if method == "bfgs":
            direction = -h_inv @ g
        else:  # newton-raphson
            hess = numeric_hessian(neg_f, x)
            try:
                direction = np.linalg.solve(hess, -g)
            except np.linalg.LinAlgError:
                direction = -g
        if direction @ g >= 0:
            # Newton step on an indefinite Hessian (or a degenerate BFGS
            # state): fall back to steepest descent
            direction = -g

        step, fval_new, ok = _armijo_descent(neg_f, x, fval, g, direction)
        if not ok:
            converged = bool(np.max(np.abs(g)) <= gtol)
            message = "line search stalled"
            break

        x_new = x + step * direction
        g_new = -grad_f(x_new)

        if method == "bfgs":
            s = x_new - x
            y = g_new - g
            sy = s @ y
            if sy > 1e-12 * max(1.0, float(np.linalg.norm(s)) * float(np.linalg.norm(y))):
                rho = 1.0 / sy
                eye = np.eye(p)
                h_inv = (eye - rho * np.outer(s, y)) @ h_inv @ (
                    eye - rho * np.outer(y, s)
                ) + rho * np.outer(s, s)
        x, fval, g = x_new, fval_new, g_new

    if np.max(np.abs(g)) <= gtol:
        converged = True
        message = "gradient norm below tolerance"

    return OptimResult(
        argmax=x,
        value=-float(fval),
        converged=converged,
        iterations=iterations,
        gradient=-g,
        message=message,
    )


def _armijo_descent(f, x, fx, g, direction, max_backtracks: int = 60):
    """Backtracking Armijo line search; shrinks through non-finite values."""
    slope = g @ direction
    step = 1.0
    for _ in range(max_backtracks):
        candidate = f(x + step * direction)
        if np.isfinite(candidate) and candidate <= fx + ARMIJO_SLOPE * step * slope:
            return step, candidate, True
        step *= BACKTRACK
    return 0.0, fx, False


def maximize_auglag(
    f: Callable[[np.ndarray], float],
    constraints: ConstraintSet,
    start: Sequence[float],
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    inner_method: str = "bfgs",
    gtol: float = GRAD_TOL,
    eq_tol: float = EQ_TOL,
    ineq_tol: float = INEQ_TOL,
    max_outer_iter: int = MAX_OUTER_ITER,
    max_inner_iter: int = MAX_INNER_ITER,
    compute_hessian: bool = False,
) -> OptimResult:
    """Maximize f subject to h(x) = 0 and g(x) >= 0 from a feasible start.

    Outer iterations update multipliers and the penalty; each inner
    solve is an unconstrained maximization of the augmented objective.
    Convergence requires the KKT stationarity residual at or below
    ``gtol``, |h| <= ``eq_tol``, and g >= -``ineq_tol``.  When
    ``compute_hessian`` is set, the Hessian of f itself (not of the
    augmented objective) at the solution is attached for inference.
    """
    x = np.asarray(start, dtype=float)
    if constraints.violation(x) > 1e-8:
        raise EstimationError(
            f"starting point violates constraints by {constraints.violation(x):.3e}; "
            "supply a feasible start"
        )
    if not np.isfinite(f(x)):
        raise EstimationError("objective is not finite at the starting point")

    grad_f = gradient if gradient is not None else (lambda z: numeric_gradient(f, z))
    n_eq = len(constraints.equalities)
    n_ineq = len(constraints.inequalities)
    mu = np.zeros(n_eq)  # equality multipliers
    nu = np.zeros(n_ineq)  # inequality multipliers, kept >= 0
    rho = INITIAL_PENALTY

    def augmented(z: np.ndarray) -> float:
        # minimization form applied to -f, returned negated so the inner
        # solver can keep maximizing
        val = f(z)
        if not np.isfinite(val):
            return val
        hv = constraints.eq_values(z) if n_eq else np.empty(0)
        gv = constraints.ineq_values(z) if n_ineq else np.empty(0)
        penalty = float(mu @ hv) + 0.5 * rho * float(hv @ hv)
        if n_ineq:
            shifted = nu / rho - gv
            active = shifted > 0
            penalty += 0.5 * rho * float(shifted[active] @ shifted[active])
            penalty -= float(nu @ nu) / (2.0 * rho)
        return val - penalty

    def augmented_gradient(z: np.ndarray) -> np.ndarray:
        g = grad_f(z)
        if n_eq:
            hv = constraints.eq_values(z)
            jac = constraints.eq_jacobian(z)
            g = g - (mu + rho * hv) @ jac
        if n_ineq:
            gv = constraints.ineq_values(z)
            jac = constraints.ineq_jacobian(z)
            mult = np.maximum(0.0, nu - rho * gv)
            g = g + mult @ jac
        return g

    converged = False
    total_inner = 0
    prev_violation = np.inf
    message = "outer iteration cap reached"
    for outer in range(1, max_outer_iter + 1):
        # loose inner tolerance on early outer rounds, full tolerance later
        inner_gtol = gtol * 10.0 ** max(0, 3 - outer)
        inner = maximize_unconstrained(
            augmented,
            x,
            method=inner_method,
            gradient=augmented_gradient,
            gtol=inner_gtol,
            max_iter=max_inner_iter,
        )
        x = inner.argmax
        total_inner += inner.iterations

        hv = constraints.eq_values(x) if n_eq else np.empty(0)
        gv = constraints.ineq_values(x) if n_ineq else np.empty(0)
        violation = 0.0
        if n_eq:
            violation = max(violation, float(np.max(np.abs(hv))))
        if n_ineq:
            violation = max(violation, float(np.max(np.maximum(0.0, -gv))))

        # first-order multiplier updates
        mu = mu + rho * hv
        nu = np.maximum(0.0, nu - rho * gv)

        # KKT stationarity with the updated multipliers
        stat = grad_f(x)
        if n_eq:
            stat = stat - mu @ constraints.eq_jacobian(x)
        if n_ineq:
            stat = stat + nu @ constraints.ineq_jacobian(x)
        stationarity = float(np.max(np.abs(stat))) if stat.size else 0.0

        eq_ok = (not n_eq) or float(np.max(np.abs(hv))) <= eq_tol
        ineq_ok = (not n_ineq) or float(np.min(gv)) >= -ineq_tol
        if eq_ok and ineq_ok and stationarity <= gtol:
            converged = True
            message = "KKT conditions satisfied"
            break

        if violation > 0.25 * prev_violation and violation > eq_tol:
            rho *= PENALTY_GROWTH
        if rho > 1e12:
            message = "penalty overflow: constraint violation not decreasing"
            break
        prev_violation = max(violation, 1e-300)

    result = OptimResult(
        argmax=x,
        value=float(f(x)),
        converged=converged,
        iterations=total_inner,
        gradient=grad_f(x),
        message=message,
    )
    if compute_hessian:
        result.hessian = numeric_hessian(f, x)
    return result
