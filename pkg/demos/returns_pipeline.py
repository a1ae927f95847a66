"""End-to-end pipeline from price series to a covariate-mixture fit.

Mirrors the stock-index workflow: percent log returns of two synthetic
indexes, tercile discretization at the quartile cut-points, and a
mixture fit driven by a lagged macro series.  Swap in real CSVs via the
CLI (``markovmix estimate --model gmmc ...``) for the same pipeline.
"""

import numpy as np

from markovmix import (
    CovariateMatrix,
    conditional_transition_matrix,
    discretize_quantiles,
    encode_sequences,
    estimate_gmmc,
    format_report,
    log_returns,
)

rng = np.random.default_rng(11)
n_days = 2600

# a slow macro factor and two correlated synthetic index price paths
macro = np.cumsum(rng.normal(0.0, 0.02, size=n_days)) + 1.5
common = rng.normal(0.0, 0.009, size=n_days)
idx1 = 100.0 * np.exp(np.cumsum(common + rng.normal(0, 0.004, n_days) + 0.0005 * macro))
idx2 = 100.0 * np.exp(np.cumsum(common + rng.normal(0, 0.005, n_days)))

r1 = log_returns(idx1)
r2 = log_returns(idx2)
print(f"returns: n = {len(r1)}, means = {r1.mean():.4f} / {r2.mean():.4f}")

s1 = discretize_quantiles(r1, lower_q=0.25, upper_q=0.75)
s2 = discretize_quantiles(r2, lower_q=0.25, upper_q=0.75)
for name, states in (("index 1", s1), ("index 2", s2)):
    freq = np.bincount(states, minlength=4)[1:] / len(states)
    print(f"{name} state frequencies: {np.round(freq, 3)}")

panel = encode_sequences([s1.tolist(), s2.tolist()])
covariates = CovariateMatrix(macro[1:].reshape(-1, 1), ["macro"])

fit = estimate_gmmc(panel, covariates, initial=[1.0, 1.0], x_lag=1)
print()
print(format_report(fit.fit_report))

low, high = macro.min(), macro.max()
print(f"equation-0 transition matrix at macro = {low:.2f}:")
print(np.round(conditional_transition_matrix(fit, 0, low), 3))
print(f"\nequation-0 transition matrix at macro = {high:.2f}:")
print(np.round(conditional_transition_matrix(fit, 0, high), 3))
