"""Multinomial logistic regression for lag-state + covariate designs.

Estimates the non-homogeneous conditional probabilities
P(next state of chain j | previous state of chain k, covariates) by
Newton-Raphson maximum likelihood with state 1 as the reference
category.  Designs are built with an intercept, indicator columns for
lag states 2..m_k, and the covariate row assigned to the predicted
time step (covariate lag is caller-controlled, default 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from .data import CovariateMatrix, Panel
from .exceptions import DataError

SCORE_TOL = 1e-8
LL_TOL = 1e-10
MAX_NEWTON_ITER = 100
SEPARATION_BOUND = 30.0
RIDGE = 1e-8


@dataclass
class DesignSpec:
    """Column layout of a lag-state design matrix."""

    n_source_states: int  # m_k: lag alphabet (gives m_k - 1 indicator columns)
    n_covariates: int
    x_lag: int
    column_names: list[str] = field(default_factory=list)

    @property
    def n_columns(self) -> int:
        return 1 + (self.n_source_states - 1) + self.n_covariates


@dataclass
class MnLogitModel:
    """Fitted multinomial logit: (m_j - 1) x p coefficients, reference state 1."""

    coefficients: np.ndarray
    n_states: int  # m_j: target alphabet
    spec: DesignSpec
    loglik: float
    converged: bool
    iterations: int
    separation: bool = False

    def __post_init__(self):
        self.coefficients = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        if self.coefficients.shape != (self.n_states - 1, self.spec.n_columns):
            raise ValueError(
                f"coefficient shape {self.coefficients.shape} does not match "
                f"({self.n_states - 1}, {self.spec.n_columns})"
            )


def build_design(
    panel: Panel,
    from_chain: int,
    to_chain: int,
    covariates: Optional[CovariateMatrix] = None,
    x_lag: int = 1,
) -> tuple[np.ndarray, np.ndarray, DesignSpec]:
    """Design matrix and response for a lag-one regression between chains.

    One row per predicted time step: response is the target chain's
    state at t, predictors are an intercept, indicators of the source
    chain's state at t-1, and the covariate row for time t - x_lag.
    With the default lag of 1 the covariate is the one observed
    alongside the lagged states.
    """
    if x_lag < 0:
        raise DataError(f"x_lag must be >= 0, got {x_lag}")
    n = panel.n_obs
    d = covariates.n_covariates if covariates is not None else 0
    if covariates is not None and covariates.n_obs != n:
        raise DataError(
            f"covariates have {covariates.n_obs} rows for a panel of length {n}"
        )
    m_k = panel.alphabet_sizes[from_chain]

    first = max(1, x_lag)
    t_idx = np.arange(first, n)  # 0-based indices of the predicted observations
    if t_idx.size == 0:
        raise DataError(f"x_lag {x_lag} leaves no usable rows for a panel of length {n}")
    lag_states = panel.states[t_idx - 1, from_chain]
    response = panel.states[t_idx, to_chain]

    cols = [np.ones(t_idx.size)]
    names = ["intercept"]
    for state in range(2, m_k + 1):
        cols.append((lag_states == state).astype(float))
        names.append(f"lag{from_chain}=={state}")
    if covariates is not None:
        cols.append(covariates.values[t_idx - x_lag, :])
        names.extend(covariates.column_names)
    design = np.column_stack(cols)
    spec = DesignSpec(
        n_source_states=m_k, n_covariates=d, x_lag=x_lag, column_names=names
    )
    return design, response, spec


def mnlogit_loglik(coefficients: np.ndarray, design: np.ndarray, response: np.ndarray) -> float:
    """Multinomial log-likelihood at the given (m-1, p) coefficients."""
    logits = _full_logits(coefficients, design)
    row_ll = logits[np.arange(len(response)), response - 1] - logsumexp(logits, axis=1)
    return float(row_ll.sum())


def mnlogit_score(coefficients: np.ndarray, design: np.ndarray, response: np.ndarray) -> np.ndarray:
    """Analytic score, flattened to match ``coefficients.ravel()``."""
    coefficients = np.atleast_2d(coefficients)
    probs = _softmax(_full_logits(coefficients, design))
    m = coefficients.shape[0] + 1
    indicators = (response[:, None] == np.arange(2, m + 1)[None, :]).astype(float)
    # (m-1, p) blocks: X' (1{y=c} - P_c)
    return ((indicators - probs[:, 1:]).T @ design).ravel()


def _mnlogit_hessian(coefficients: np.ndarray, design: np.ndarray) -> np.ndarray:
    """Analytic Hessian of the log-likelihood on the stacked coefficients."""
    probs = _softmax(_full_logits(coefficients, design))
    m_minus_1, p = coefficients.shape
    hess = np.empty((m_minus_1 * p, m_minus_1 * p))
    for a in range(m_minus_1):
        pa = probs[:, a + 1]
        for b in range(a, m_minus_1):
            pb = probs[:, b + 1]
            w = pa * ((1.0 if a == b else 0.0) - pb)
            block = -(design * w[:, None]).T @ design
            hess[a * p : (a + 1) * p, b * p : (b + 1) * p] = block
            if b != a:
                hess[b * p : (b + 1) * p, a * p : (a + 1) * p] = block.T
    return hess


def fit_mnlogit(
    design: np.ndarray, response: np.ndarray, n_states: Optional[int] = None,
    spec: Optional[DesignSpec] = None,
) -> MnLogitModel:
    """Newton-Raphson maximum likelihood for the multinomial logit.

    Stops when the score norm falls below 1e-8 or the log-likelihood
    change below 1e-10.  A singular information matrix gets a small
    ridge; coefficients walking past |b| = 30 flag likely perfect
    separation (the fit is still returned).  A rank-deficient design is
    an error naming the dependent columns.
    """
    design = np.asarray(design, dtype=float)
    response = np.asarray(response, dtype=int)
    nrows, p = design.shape
    if n_states is None:
        n_states = int(response.max())
    observed = np.unique(response)
    missing = sorted(set(range(1, n_states + 1)) - set(observed.tolist()))
    if missing:
        raise DataError(f"response states {missing} never observed; cannot fit {n_states} states")
    if nrows < p + 1:
        raise DataError(f"{nrows} rows cannot support {p} design columns")
    # identically-zero columns carry no information and never enter a
    # prediction; fit without them and pin their coefficients at 0
    # (covers all-zero covariates and never-visited lag indicators)
    active = ~np.all(design == 0.0, axis=0)
    reduced = design[:, active]
    _check_rank(reduced, spec, np.nonzero(active)[0])

    beta_reduced, ll, converged, iterations = _newton_fit(reduced, response, n_states)
    beta = np.zeros((n_states - 1, p))
    beta[:, active] = beta_reduced

    # perfect separation: coefficients diverging, or in-sample likelihood
    # at its supremum (every realized outcome predicted with certainty)
    separation = bool(np.max(np.abs(beta)) > SEPARATION_BOUND or ll > -1e-6)
    if spec is None:
        # generic spec for designs not built by build_design: treat every
        # column beyond the first as a covariate
        spec = DesignSpec(
            n_source_states=1, n_covariates=p - 1, x_lag=0,
            column_names=[f"x{i}" for i in range(p)],
        )
    return MnLogitModel(
        coefficients=beta,
        n_states=n_states,
        spec=spec,
        loglik=ll,
        converged=converged,
        iterations=iterations,
        separation=separation,
    )


def _newton_fit(design: np.ndarray, response: np.ndarray, n_states: int):
    """Newton-Raphson core; returns (coefficients, loglik, converged, iterations)."""
    p = design.shape[1]
    beta = np.zeros((n_states - 1, p))
    ll = mnlogit_loglik(beta, design, response)
    converged = False
    iterations = 0
    for iterations in range(1, MAX_NEWTON_ITER + 1):
        score = mnlogit_score(beta, design, response)
        if np.max(np.abs(score)) <= SCORE_TOL:
            converged = True
            iterations -= 1
            break
        info = -_mnlogit_hessian(beta, design)
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            step = np.linalg.solve(info + RIDGE * np.eye(info.shape[0]), score)
        # halve the step until the likelihood does not deteriorate
        scale = 1.0
        for _ in range(40):
            candidate = beta + scale * step.reshape(beta.shape)
            ll_new = mnlogit_loglik(candidate, design, response)
            if np.isfinite(ll_new) and ll_new >= ll - 1e-12:
                break
            scale *= 0.5
        beta = beta + scale * step.reshape(beta.shape)
        ll_new = mnlogit_loglik(beta, design, response)
        if abs(ll_new - ll) <= LL_TOL:
            ll = ll_new
            converged = True
            break
        ll = ll_new
    return beta, ll, converged, iterations


def predict_probs(model: MnLogitModel, design: np.ndarray) -> np.ndarray:
    """Predicted probability rows (softmax over the reference-coded logits)."""
    design = np.atleast_2d(np.asarray(design, dtype=float))
    if design.shape[1] != model.coefficients.shape[1]:
        raise DataError(
            f"design has {design.shape[1]} columns; model expects "
            f"{model.coefficients.shape[1]}"
        )
    return _softmax(_full_logits(model.coefficients, design))


def _full_logits(coefficients: np.ndarray, design: np.ndarray) -> np.ndarray:
    coefficients = np.atleast_2d(coefficients)
    z = design @ coefficients.T
    return np.hstack([np.zeros((design.shape[0], 1)), z])


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    return expz / expz.sum(axis=1, keepdims=True)


def _check_rank(
    design: np.ndarray,
    spec: Optional[DesignSpec],
    column_map: Optional[np.ndarray] = None,
) -> None:
    _, r, pivots = scipy.linalg.qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag[0] * max(design.shape) * np.finfo(float).eps if diag.size else 0.0
    rank = int((diag > tol).sum())
    if rank < design.shape[1]:
        bad = sorted(int(c) for c in pivots[rank:])
        if column_map is not None:
            bad = [int(column_map[c]) for c in bad]
        if spec is not None and spec.column_names:
            names = [spec.column_names[c] for c in bad]
            raise DataError(f"design is rank deficient; dependent columns: {names}")
        raise DataError(f"design is rank deficient; dependent column indices: {bad}")
