"""Probit-link mixture model over plug-in transition probabilities.

Per equation j, the conditional probability of next state c given every
chain's lagged state is

    Phi(e_0 + sum_k e_k * P_jk(c | lag_k)) normalized over c,

with Phi the standard normal CDF and P_jk the empirical plug-in
transition matrices.  The e parameters are unconstrained reals, so the
likelihood is maximized with the unconstrained optimizer menu; the
normal CDF keeps every probability strictly positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from scipy.special import log_ndtr, logsumexp

from .data import Panel, TransitionMatrix, transition_matrix_grid
from .inference import FitReport, equation_report, norm_cdf
from .mtd import _hessian_std_errors
from .optim import maximize_unconstrained, numeric_hessian


@dataclass
class ProbitModel:
    etas: np.ndarray  # (s, s+1); row j = (e_j0, e_j1..e_js)
    transmats: list[list[TransitionMatrix]]
    logliks: np.ndarray
    fit_report: FitReport
    converged: list[bool] = field(default_factory=list)
    include_intercept: bool = True

    @property
    def n_chains(self) -> int:
        return self.etas.shape[0]


def probit_distribution(
    transmats: list[list[TransitionMatrix]],
    etas: Sequence[float],
    equation: int,
    lagged_states: Sequence[int],
) -> np.ndarray:
    """Full next-state distribution for one conditioning pattern."""
    etas = np.asarray(etas, dtype=float)
    s = len(lagged_states)
    m = transmats[equation][0].probs.shape[1]
    args = np.full(m, etas[0])
    for k in range(s):
        args += etas[k + 1] * transmats[equation][k].probs[lagged_states[k] - 1, :]
    weights = norm_cdf(args)
    return weights / weights.sum()


def probit_prob(
    model: ProbitModel, equation: int, lagged_states: Sequence[int], target: int
) -> float:
    """P(next state of the equation's chain = target | lagged states)."""
    dist = probit_distribution(model.transmats, model.etas[equation], equation, lagged_states)
    return float(dist[target - 1])


def probit_loglik(panel: Panel, model: ProbitModel) -> np.ndarray:
    """Per-equation log-likelihood of the panel under the fitted model."""
    return np.array(
        [
            _equation_loglik(
                model.etas[j],
                *_stack_plugin_probs(panel, model.transmats, j),
            )
            for j in range(panel.n_chains)
        ]
    )


def estimate_mtd_probit(
    panel: Panel,
    initial: Optional[Sequence[float]] = None,
    nummethod: str = "bfgs",
    include_intercept: bool = True,
    transmats: Optional[list[list[TransitionMatrix]]] = None,
) -> ProbitModel:
    """Maximize the probit-mixture likelihood per equation.

    ``initial`` defaults to all ones, one value per parameter
    (intercept plus one slope per chain).  ``nummethod`` picks the
    unconstrained optimizer.  With ``include_intercept`` false the
    intercept is fixed at zero and only the slopes are estimated.
    Plug-in transition matrices are estimated from the panel unless an
    explicit grid is supplied (e.g. known matrices in simulations).
    """
    s = panel.n_chains
    n_params = s + 1 if include_intercept else s
    init = np.ones(n_params) if initial is None else np.asarray(initial, dtype=float)
    if init.shape != (n_params,):
        raise ValueError(f"initial values must have length {n_params}, got {init.shape}")
    if not np.isfinite(init).all():
        raise ValueError("initial values must be finite")

    if transmats is None:
        transmats = transition_matrix_grid(panel)
    etas = np.zeros((s, s + 1))
    logliks = np.empty(s)
    converged: list[bool] = []
    equations = []
    for j in range(s):
        plugin, realized = _stack_plugin_probs(panel, transmats, j)

        def objective(theta: np.ndarray) -> float:
            return _equation_loglik(_expand(theta, include_intercept), plugin, realized)

        result = maximize_unconstrained(objective, init, method=nummethod)
        etas[j] = _expand(result.argmax, include_intercept)
        logliks[j] = result.value
        converged.append(result.converged)

        hess = numeric_hessian(objective, result.argmax)
        std_errors = _hessian_std_errors(hess)
        warnings = []
        if not result.converged:
            warnings.append(
                f"optimizer did not converge: {result.message} "
                f"({result.iterations} iterations); the likelihood may be flat"
            )
        if std_errors is None:
            warnings.append("Hessian is singular; standard errors unavailable")
            std_errors = np.full(n_params, np.nan)
        names = [f"eta{i}" for i in range(0 if include_intercept else 1, s + 1)]
        equations.append(
            equation_report(
                result.argmax, std_errors, result.value, row_names=names, warnings=warnings
            )
        )

    return ProbitModel(
        etas=etas,
        transmats=transmats,
        logliks=logliks,
        fit_report=FitReport(equations),
        converged=converged,
        include_intercept=include_intercept,
    )


def _expand(theta: np.ndarray, include_intercept: bool) -> np.ndarray:
    return theta if include_intercept else np.concatenate(([0.0], theta))


def _stack_plugin_probs(
    panel: Panel, transmats: list[list[TransitionMatrix]], equation: int
) -> tuple[np.ndarray, np.ndarray]:
    """Plug-in tensor (n-1, s, m) of P_jk(c | lag_k) plus realized states."""
    s = panel.n_chains
    layers = [
        transmats[equation][k].probs[panel.states[:-1, k] - 1, :] for k in range(s)
    ]
    plugin = np.stack(layers, axis=1)
    realized = panel.states[1:, equation] - 1
    return plugin, realized


def _equation_loglik(etas: np.ndarray, plugin: np.ndarray, realized: np.ndarray) -> float:
    # in log space throughout: Phi underflows to 0 for arguments below
    # about -38, but log(Phi) stays finite for any finite argument
    args = etas[0] + np.einsum("tkc,k->tc", plugin, etas[1:])
    log_weights = log_ndtr(args)
    log_denom = logsumexp(log_weights, axis=1)
    log_numer = log_weights[np.arange(len(realized)), realized]
    return float(np.sum(log_numer - log_denom))
