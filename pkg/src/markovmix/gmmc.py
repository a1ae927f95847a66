"""Covariate-driven multivariate Markov chain mixture estimation.

Per equation j, the next-state distribution of chain j mixes
non-homogeneous conditionals P(S_j,t | S_k,t-1, x) across source chains
k with weights on the probability simplex.  The conditionals are
multinomial-logit fits, estimated first and treated as plug-ins; the
weights then maximize the mixture log-likelihood under the simplex
constraints via the Augmented Lagrangian method.  Standard errors come
from the analytic Hessian in the weights at the optimum (first-stage
uncertainty is not propagated, a documented understatement).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._mixture import mixture_gradient, mixture_hessian, mixture_loglik
from .data import CovariateMatrix, Panel, moving_average
from .exceptions import DataError, EstimationError
from .inference import FitReport, equation_report
from .mnlogit import (
    DesignSpec,
    MnLogitModel,
    build_design,
    fit_mnlogit,
    predict_probs,
)
from .mtd import _hessian_std_errors
from .optim import ConstraintSet, maximize_auglag, project_simplex

FIT_FORMAT = "markovmix-gmmc-fit"
FIT_VERSION = 1


@dataclass
class GmmcFit:
    """Fitted covariate mixture: weights, submodels, and inference columns."""

    weights: np.ndarray  # (s, s); row j = equation j's mixture weights
    submodels: list[list[MnLogitModel]]  # [j][k]
    logliks: np.ndarray
    hessians: list[np.ndarray]
    fit_report: FitReport
    alphabet_sizes: tuple[int, ...]
    labels: list[list]
    x_lag: int
    covariate_names: list[str]
    converged: list[bool] = field(default_factory=list)
    # training-row conditional probabilities, kept for smoothed paths:
    # train_probs[j][k] has shape (rows, m_j)
    train_probs: Optional[list[list[np.ndarray]]] = None
    prob_tensors: Optional[list[np.ndarray]] = None

    @property
    def n_chains(self) -> int:
        return self.weights.shape[0]


def build_prob_tensor(
    panel: Panel,
    covariates: CovariateMatrix,
    x_lag: int = 1,
) -> tuple[list[np.ndarray], list[list[MnLogitModel]], list[list[np.ndarray]]]:
    """Fit the per-(equation, source) logits and evaluate realized probabilities.

    Returns, per equation j: a (rows, s) tensor whose [t, k] entry is
    the fitted probability of the realized state of chain j at step t
    conditional on chain k's lagged state and the covariate row; the
    fitted submodels; and the full predicted distributions at the
    training rows (rows, m_j) for each source chain.
    """
    s = panel.n_chains
    tensors: list[np.ndarray] = []
    submodels: list[list[MnLogitModel]] = []
    train_probs: list[list[np.ndarray]] = []
    for j in range(s):
        row_models: list[MnLogitModel] = []
        row_probs: list[np.ndarray] = []
        q_cols = []
        for k in range(s):
            design, response, spec = build_design(
                panel, from_chain=k, to_chain=j, covariates=covariates, x_lag=x_lag
            )
            try:
                model = fit_mnlogit(
                    design, response, n_states=panel.alphabet_sizes[j], spec=spec
                )
            except (DataError, EstimationError) as err:
                raise type(err)(
                    f"conditional fit for equation {j}, source chain {k}: {err}"
                ) from err
            probs = predict_probs(model, design)
            q_cols.append(probs[np.arange(len(response)), response - 1])
            row_models.append(model)
            row_probs.append(probs)
        tensors.append(np.column_stack(q_cols))
        submodels.append(row_models)
        train_probs.append(row_probs)
    return tensors, submodels, train_probs


def gmmc_loglik(weights: Sequence[float], tensor: np.ndarray) -> float:
    """Mixture log-likelihood: sum_t log(weights . q_t); -inf on zero mixture."""
    return mixture_loglik(np.asarray(weights, dtype=float), tensor)


def gmmc_hessian(weights: Sequence[float], tensor: np.ndarray) -> np.ndarray:
    """Analytic Hessian -sum_t q_t q_t' / (w.q_t)^2 of the mixture log-likelihood."""
    return mixture_hessian(np.asarray(weights, dtype=float), tensor)


def estimate_gmmc(
    panel: Panel,
    covariates: CovariateMatrix,
    initial: Optional[Sequence[float]] = None,
    x_lag: int = 1,
) -> GmmcFit:
    """Constrained MLE of the mixture weights, one equation at a time.

    ``initial`` is projected onto the simplex before use (so the
    all-ones convention is accepted); the default start is uniform.
    """
    s = panel.n_chains
    if s < 2:
        raise DataError("need at least 2 chains; a single chain has nothing to mix")
    if initial is None:
        start = np.full(s, 1.0 / s)
    else:
        start = np.asarray(initial, dtype=float)
        if start.shape != (s,):
            raise DataError(f"initial weights must have length {s}, got {start.shape}")
        if not np.isfinite(start).all():
            raise DataError("initial weights must be finite")
        start = project_simplex(start)

    tensors, submodels, train_probs = build_prob_tensor(panel, covariates, x_lag=x_lag)

    constraints = ConstraintSet(
        equalities=[lambda w: float(w.sum() - 1.0)],
        inequalities=[(lambda w, i=i: float(w[i])) for i in range(s)],
        equality_jacobians=[lambda w: np.ones(s)],
        inequality_jacobians=[(lambda w, i=i: np.eye(s)[i]) for i in range(s)],
    )

    weights = np.empty((s, s))
    logliks = np.empty(s)
    hessians: list[np.ndarray] = []
    converged: list[bool] = []
    equations = []
    for j in range(s):
        q = tensors[j]
        result = maximize_auglag(
            lambda w: mixture_loglik(w, q),
            constraints,
            start,
            gradient=lambda w: mixture_gradient(w, q),
        )
        # the solver satisfies the constraints to tolerance; snap the last
        # ~1e-7 onto the simplex so downstream invariants hold exactly
        lam = project_simplex(result.argmax)
        weights[j] = lam
        logliks[j] = mixture_loglik(lam, q)
        converged.append(result.converged)

        hess = gmmc_hessian(lam, q)
        hessians.append(hess)
        std_errors = _hessian_std_errors(hess)
        warnings = []
        if not result.converged:
            warnings.append(f"weight optimization did not converge: {result.message}")
        if (lam < 1e-8).any():
            warnings.append(
                "estimate sits on the simplex boundary; Wald columns are reported "
                "but their asymptotics are unreliable there"
            )
        if _is_flat(q, lam):
            warnings.append("log-likelihood is nearly flat in the weights; any simplex "
                            "point fits equally well")
        if std_errors is None:
            warnings.append("Hessian is singular; standard errors unavailable")
            std_errors = np.full(s, np.nan)
        equations.append(equation_report(lam, std_errors, result.value, warnings=warnings))

    return GmmcFit(
        weights=weights,
        submodels=submodels,
        logliks=logliks,
        hessians=hessians,
        fit_report=FitReport(equations),
        alphabet_sizes=panel.alphabet_sizes,
        labels=panel.labels,
        x_lag=x_lag,
        covariate_names=list(covariates.column_names),
        converged=converged,
        train_probs=train_probs,
        prob_tensors=tensors,
    )


def _is_flat(q: np.ndarray, lam: np.ndarray) -> bool:
    """Likelihood spread across simplex vertices, the center, and the estimate."""
    s = q.shape[1]
    points = [np.eye(s)[v] for v in range(s)]
    points.append(np.full(s, 1.0 / s))
    points.append(lam)
    values = [mixture_loglik(p, q) for p in points]
    finite = [v for v in values if np.isfinite(v)]
    return len(finite) == len(values) and (max(finite) - min(finite)) < 1e-6


def _submodel_distribution(
    model: MnLogitModel, lag_state: int, x_value: np.ndarray
) -> np.ndarray:
    """Predicted next-state distribution for one lag state and covariate row."""
    m_k = model.spec.n_source_states
    if not 1 <= lag_state <= m_k:
        raise DataError(f"lag state {lag_state} outside 1..{m_k}")
    row = np.zeros(model.spec.n_columns)
    row[0] = 1.0
    if lag_state >= 2:
        row[lag_state - 1] = 1.0
    if model.spec.n_covariates:
        row[m_k:] = x_value
    return predict_probs(model, row[None, :])[0]


def conditional_distribution(
    fit: GmmcFit, equation: int, lagged_states: Sequence[int], x_value
) -> np.ndarray:
    """Mixture next-state distribution at explicit per-chain lagged states."""
    x_value = _check_x(fit, x_value)
    lagged = list(lagged_states)
    if len(lagged) != fit.n_chains:
        raise DataError(f"need {fit.n_chains} lagged states, got {len(lagged)}")
    m_j = fit.alphabet_sizes[equation]
    dist = np.zeros(m_j)
    for k in range(fit.n_chains):
        dist += fit.weights[equation, k] * _submodel_distribution(
            fit.submodels[equation][k], lagged[k], x_value
        )
    # each component sums to 1, so the mixture sums to the weight total,
    # which can sit a constraint-tolerance away from 1; renormalize
    return dist / dist.sum()


def conditional_transition_matrix(fit: GmmcFit, equation: int, x_value) -> np.ndarray:
    """Equation-level transition matrix at a covariate value.

    Row i is the mixture distribution of the equation's next state when
    every lagged chain sits in the source state with label
    ``fit.labels[equation][i]``; chains must share that label.  Rows are
    mixtures of distributions, so they sum to one for any covariate
    value.
    """
    x_value = _check_x(fit, x_value)
    labels_j = fit.labels[equation]
    m_j = fit.alphabet_sizes[equation]
    matrix = np.empty((m_j, m_j))
    for i, label in enumerate(labels_j):
        lagged = []
        for k in range(fit.n_chains):
            try:
                lagged.append(fit.labels[k].index(label) + 1)
            except ValueError:
                raise DataError(
                    f"source label {label!r} of equation {equation} does not occur "
                    f"in chain {k}; same-state conditioning needs a shared alphabet"
                ) from None
        matrix[i] = conditional_distribution(fit, equation, lagged, x_value)
    return matrix


def transition_edge_list(fit: GmmcFit, equation: int, x_value) -> list[tuple]:
    """(source_state, dest_state, probability) rows with original labels."""
    matrix = conditional_transition_matrix(fit, equation, x_value)
    labels = fit.labels[equation]
    return [
        (labels[i], labels[c], float(matrix[i, c]))
        for i in range(matrix.shape[0])
        for c in range(matrix.shape[1])
    ]


def smoothed_conditional_probs(
    fit: GmmcFit, equation: int, source_chain: int, window: int = 5
) -> np.ndarray:
    """Moving-average-smoothed fitted probability paths, one column per state.

    Smooths the training-row conditionals P(S_j,t = c | S_k,t-1, x) with
    a trailing window; output has rows - window + 1 time points.
    """
    if fit.train_probs is None:
        raise EstimationError(
            "this fit does not retain training probabilities (it was loaded "
            "from serialized form); refit to compute smoothed paths"
        )
    paths = fit.train_probs[equation][source_chain]
    return np.column_stack(
        [moving_average(paths[:, c], window=window) for c in range(paths.shape[1])]
    )


def save_fit(fit: GmmcFit, path) -> None:
    """Serialize a fit to versioned JSON (enough to rebuild predictions)."""
    doc = {
        "format": FIT_FORMAT,
        "version": FIT_VERSION,
        "n_chains": fit.n_chains,
        "alphabet_sizes": list(fit.alphabet_sizes),
        "labels": [[_json_label(v) for v in lab] for lab in fit.labels],
        "x_lag": fit.x_lag,
        "covariate_names": fit.covariate_names,
        "converged": [bool(c) for c in fit.converged],
        "weights": fit.weights.tolist(),
        "logliks": fit.logliks.tolist(),
        "hessians": [h.tolist() for h in fit.hessians],
        "report": fit.fit_report.to_dict(),
        "submodels": [
            [
                {
                    "coefficients": model.coefficients.tolist(),
                    "n_states": model.n_states,
                    "n_source_states": model.spec.n_source_states,
                    "n_covariates": model.spec.n_covariates,
                    "column_names": model.spec.column_names,
                    "loglik": model.loglik,
                    "converged": model.converged,
                    "separation": model.separation,
                }
                for model in row
            ]
            for row in fit.submodels
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_fit(path) -> GmmcFit:
    """Rebuild a GmmcFit from its JSON serialization."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != FIT_FORMAT:
        raise DataError(f"{path}: not a serialized fit (format={doc.get('format')!r})")
    if doc.get("version") != FIT_VERSION:
        raise DataError(f"{path}: unsupported fit version {doc.get('version')!r}")

    x_lag = int(doc["x_lag"])
    submodels = [
        [
            MnLogitModel(
                coefficients=np.array(entry["coefficients"], dtype=float),
                n_states=int(entry["n_states"]),
                spec=DesignSpec(
                    n_source_states=int(entry["n_source_states"]),
                    n_covariates=int(entry["n_covariates"]),
                    x_lag=x_lag,
                    column_names=list(entry["column_names"]),
                ),
                loglik=float(entry["loglik"]),
                converged=bool(entry["converged"]),
                iterations=0,
                separation=bool(entry["separation"]),
            )
            for entry in row
        ]
        for row in doc["submodels"]
    ]
    report = FitReport(
        [
            equation_report(
                np.array(eq["estimates"], dtype=float),
                np.array(
                    [np.nan if v is None else v for v in eq["std_errors"]], dtype=float
                ),
                float(eq["loglik"]),
                warnings=list(eq["warnings"]),
            )
            for eq in doc["report"]["equations"]
        ]
    )
    return GmmcFit(
        weights=np.array(doc["weights"], dtype=float),
        submodels=submodels,
        logliks=np.array(doc["logliks"], dtype=float),
        hessians=[np.array(h, dtype=float) for h in doc["hessians"]],
        fit_report=report,
        alphabet_sizes=tuple(int(m) for m in doc["alphabet_sizes"]),
        labels=[list(lab) for lab in doc["labels"]],
        x_lag=x_lag,
        covariate_names=list(doc["covariate_names"]),
        converged=[bool(c) for c in doc["converged"]],
    )


def _json_label(value):
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


def _check_x(fit: GmmcFit, x_value) -> np.ndarray:
    x_value = np.atleast_1d(np.asarray(x_value, dtype=float))
    d = len(fit.covariate_names)
    if x_value.shape != (d,):
        raise DataError(
            f"covariate value has shape {x_value.shape}; fit expects {d} value(s) "
            f"({', '.join(fit.covariate_names)})"
        )
    return x_value
