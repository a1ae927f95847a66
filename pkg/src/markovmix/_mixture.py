"""Shared core for mixture log-likelihoods on probability tensors.

Both the multimatrix MTD and the covariate-driven model reduce, per
equation, to weights on the simplex scoring a (rows, s) tensor ``q``
whose entry [t, k] is the source-k conditional probability of the
realized state at step t.  The log-likelihood, gradient, and Hessian
in the weights live here.
"""

from __future__ import annotations

import numpy as np


def mixture_loglik(weights: np.ndarray, q: np.ndarray) -> float:
    """Sum over rows of log(weights . q_t); -inf when any mixture is <= 0."""
    mix = q @ weights
    if (mix <= 0).any():
        return -np.inf
    return float(np.log(mix).sum())


def mixture_gradient(weights: np.ndarray, q: np.ndarray) -> np.ndarray:
    mix = q @ weights
    return q.T @ (1.0 / mix)


def mixture_hessian(weights: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hessian of the mixture log-likelihood: -sum_t q_t q_t' / (w.q_t)^2."""
    mix = q @ weights
    scaled = q / mix[:, None]
    return -(scaled.T @ scaled)
