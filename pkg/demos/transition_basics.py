"""Encoding categorical panels and estimating cross-chain transition matrices.

Two aligned sequences of market regimes are integer-coded, their
lag-one transition counts tallied for every (source, target) chain
pair, and normalized into row-stochastic matrices.  The min-max weights
on the stationary profiles give a quick first look at which chain
carries information about which.
"""

import numpy as np

from markovmix import (
    count_transitions,
    empirical_distribution,
    encode_sequences,
    estimate_lambda_minmax,
    row_normalize,
)

rng = np.random.default_rng(8)

# two regime sequences: "calm"/"choppy" coded from raw labels
calm_choppy = rng.choice(["calm", "choppy"], size=120, p=[0.7, 0.3])
up_down = np.where(rng.random(120) < 0.55, "up", "down")
panel = encode_sequences([calm_choppy.tolist(), up_down.tolist()])

print("alphabets:", panel.alphabet_sizes)
print("labels:   ", panel.labels)

for k in range(panel.n_chains):
    for j in range(panel.n_chains):
        freq = count_transitions(panel, from_chain=k, to_chain=j)
        tm = row_normalize(freq)
        print(f"\ncounts chain {k} -> chain {j} (total {freq.counts.sum()}):")
        print(freq.counts)
        print("row-normalized:")
        print(np.round(tm.probs, 3))

print("\nstationary profiles:")
for j in range(panel.n_chains):
    print(f"  chain {j}:", np.round(empirical_distribution(panel, j), 3))

print("\nmin-max mixture weights (rows = equations):")
print(np.round(estimate_lambda_minmax(panel), 3))
