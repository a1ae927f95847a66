"""Multimatrix mixture transition distribution model for several chains.

Each equation j mixes lag-one transition probabilities from every chain
with weights on the probability simplex: the conditional distribution
of chain j's next state is sum_k w_jk * P_jk(. | state of chain k).
Transition matrices come from empirical counts; weights are estimated
either by likelihood hill-climbing with stepwise mass reallocation or
by the min-max linear program on stationary distributions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.optimize

from ._mixture import mixture_gradient, mixture_hessian, mixture_loglik
from .data import Panel, TransitionMatrix, empirical_distribution, transition_matrix_grid
from .exceptions import EstimationError
from .inference import FitReport, equation_report

FLAT_LL_TOL = 1e-6


@dataclass
class MtdModel:
    weights: np.ndarray  # (s, s); row j holds equation j's mixture weights
    transmats: list[list[TransitionMatrix]]  # [j][k]
    logliks: np.ndarray
    fit_report: FitReport
    constrained: bool
    converged: list[bool] = field(default_factory=list)
    flat_likelihood: list[bool] = field(default_factory=list)

    @property
    def n_chains(self) -> int:
        return self.weights.shape[0]


def realized_prob_tensor(panel: Panel, transmats: list[list[TransitionMatrix]], equation: int) -> np.ndarray:
    """(n-1, s) tensor: [t, k] = P_jk(realized state of j at t+1 | state of k at t)."""
    s = panel.n_chains
    dst = panel.states[1:, equation] - 1
    cols = []
    for k in range(s):
        src = panel.states[:-1, k] - 1
        cols.append(transmats[equation][k].probs[src, dst])
    return np.column_stack(cols)


def mtd_predict(model: MtdModel, lagged_states) -> list[np.ndarray]:
    """Next-state distribution per equation given every chain's lagged state."""
    lagged = np.asarray(lagged_states, dtype=int)
    s = model.n_chains
    if lagged.shape != (s,):
        raise ValueError(f"need {s} lagged states, got shape {lagged.shape}")
    out = []
    for j in range(s):
        dist = np.zeros(model.transmats[j][0].probs.shape[1])
        for k in range(s):
            dist += model.weights[j, k] * model.transmats[j][k].probs[lagged[k] - 1, :]
        out.append(dist)
    return out


def mtd_loglik(
    panel: Panel, weights: np.ndarray, transmats: list[list[TransitionMatrix]]
) -> np.ndarray:
    """Per-equation mixture log-likelihood; -inf where a realized step has
    zero mixture probability."""
    weights = np.atleast_2d(np.asarray(weights, dtype=float))
    return np.array(
        [
            mixture_loglik(weights[j], realized_prob_tensor(panel, transmats, j))
            for j in range(panel.n_chains)
        ]
    )


def mtd_hessian(panel: Panel, model: MtdModel) -> list[np.ndarray]:
    """Per-equation Hessian of the log-likelihood in the mixture weights."""
    return [
        mixture_hessian(model.weights[j], realized_prob_tensor(panel, model.transmats, j))
        for j in range(panel.n_chains)
    ]


def estimate_mtd(
    panel: Panel,
    delta_stop: float = 1e-4,
    delta: float = 0.1,
    is_constrained: bool = True,
) -> MtdModel:
    """Estimate mixture weights per equation by stepwise mass reallocation.

    Starting from the uniform weights and from every simplex vertex,
    repeatedly move ``delta`` of weight from a donor to a recipient
    coordinate, pairs ordered by the log-likelihood gradient; when no
    transfer improves the likelihood the step is halved, until it drops
    below ``delta_stop``.  Transfers keep the weights summing to one;
    constrained mode additionally keeps them non-negative.
    """
    if delta_stop <= 0:
        raise ValueError(f"delta_stop must be > 0, got {delta_stop}")
    if not 0 < delta <= 1:
        raise ValueError(f"delta must be in (0, 1], got {delta}")

    s = panel.n_chains
    transmats = transition_matrix_grid(panel)
    weights = np.empty((s, s))
    logliks = np.empty(s)
    converged: list[bool] = []
    flat_flags: list[bool] = []
    equations = []

    for j in range(s):
        q = realized_prob_tensor(panel, transmats, j)
        starts = [np.full(s, 1.0 / s)]
        starts.extend(np.eye(s)[v] for v in range(s))
        start_lls = [mixture_loglik(w, q) for w in starts]
        if not any(np.isfinite(ll) for ll in start_lls):
            raise EstimationError(
                f"equation {j}: log-likelihood is -inf at every candidate start"
            )
        flat = (
            max(start_lls) - min(start_lls) < FLAT_LL_TOL
            if all(np.isfinite(ll) for ll in start_lls)
            else False
        )

        best_w, best_ll = None, -np.inf
        for w0, ll0 in zip(starts, start_lls):
            if not np.isfinite(ll0):
                continue
            w, ll = _reallocate(q, w0.copy(), ll0, delta, delta_stop, is_constrained)
            if ll > best_ll:
                best_w, best_ll = w, ll
        assert best_w is not None

        weights[j] = best_w
        logliks[j] = best_ll
        converged.append(True)
        flat_flags.append(flat)

        hess = mixture_hessian(best_w, q)
        std_errors = _hessian_std_errors(hess)
        warnings = []
        if flat:
            warnings.append("log-likelihood is flat in the weights; any simplex point is optimal")
        if not is_constrained and ((best_w < 0).any() or (best_w > 1).any()):
            warnings.append("unconstrained weights fall outside [0, 1]")
        if std_errors is None:
            warnings.append("Hessian is singular; standard errors unavailable")
            std_errors = np.full(s, np.nan)
        equations.append(
            equation_report(best_w, std_errors, best_ll, warnings=warnings)
        )

    return MtdModel(
        weights=weights,
        transmats=transmats,
        logliks=logliks,
        fit_report=FitReport(equations),
        constrained=is_constrained,
        converged=converged,
        flat_likelihood=flat_flags,
    )


def _reallocate(q, w, ll, delta, delta_stop, constrained):
    """Hill-climb the mixture log-likelihood by donor-to-recipient transfers."""
    s = w.size
    while delta >= delta_stop:
        improved = True
        while improved:
            improved = False
            grad = mixture_gradient(w, q) if np.isfinite(ll) else np.zeros(s)
            # candidate (donor, recipient) pairs ranked by first-order gain;
            # ties resolved by lowest donor then recipient index
            pairs = sorted(
                (
                    (-(grad[b] - grad[a]), a, b)
                    for a in range(s)
                    for b in range(s)
                    if a != b and (not constrained or w[a] - delta >= -1e-12)
                ),
            )
            for _, a, b in pairs:
                cand = w.copy()
                cand[a] -= delta
                cand[b] += delta
                if constrained and cand[a] < 0:
                    cand[a] = 0.0
                ll_cand = mixture_loglik(cand, q)
                if ll_cand > ll + 1e-12:
                    w, ll = cand, ll_cand
                    improved = True
                    break
        delta *= 0.5
    return w, ll


def estimate_lambda_minmax(panel: Panel) -> np.ndarray:
    """Weights minimizing the worst-coordinate stationary mismatch.

    Per equation j, solves min over simplex weights of
    max_i | sum_k w_k (P_jk' xhat_k)_i - xhat_j_i | as a linear program
    in (weights, bound).
    """
    s = panel.n_chains
    dists = [empirical_distribution(panel, k) for k in range(s)]
    transmats = transition_matrix_grid(panel)
    weights = np.empty((s, s))
    for j in range(s):
        # column b_k = predicted distribution of chain j from chain k's
        # stationary profile
        basis = np.column_stack([transmats[j][k].probs.T @ dists[k] for k in range(s)])
        target = dists[j]
        m_j = target.size
        # variables z = (w_1..w_s, u); minimize u
        c = np.zeros(s + 1)
        c[-1] = 1.0
        a_ub = np.zeros((2 * m_j, s + 1))
        b_ub = np.zeros(2 * m_j)
        a_ub[:m_j, :s] = basis
        a_ub[:m_j, -1] = -1.0
        b_ub[:m_j] = target
        a_ub[m_j:, :s] = -basis
        a_ub[m_j:, -1] = -1.0
        b_ub[m_j:] = -target
        a_eq = np.zeros((1, s + 1))
        a_eq[0, :s] = 1.0
        res = scipy.optimize.linprog(
            c,
            A_ub=a_ub,
            b_ub=b_ub,
            A_eq=a_eq,
            b_eq=np.array([1.0]),
            bounds=[(0.0, None)] * s + [(0.0, None)],
            method="highs",
        )
        if not res.success:
            raise EstimationError(f"equation {j}: min-max linear program failed: {res.message}")
        weights[j] = res.x[:s]
    return weights


def minmax_objective(panel: Panel, equation: int, weights: np.ndarray) -> float:
    """Worst-coordinate stationary mismatch for one equation's weights."""
    s = panel.n_chains
    dists = [empirical_distribution(panel, k) for k in range(s)]
    transmats = transition_matrix_grid(panel)
    basis = np.column_stack(
        [transmats[equation][k].probs.T @ dists[k] for k in range(s)]
    )
    return float(np.max(np.abs(basis @ np.asarray(weights) - dists[equation])))


def _hessian_std_errors(hess: np.ndarray) -> Optional[np.ndarray]:
    """sqrt(diag(-H^{-1})), or None when the Hessian is singular."""
    try:
        cov = np.linalg.inv(-hess)
    except np.linalg.LinAlgError:
        return None
    diag = np.diag(cov)
    if not np.isfinite(diag).all() or (diag < 0).any():
        return None
    return np.sqrt(diag)
