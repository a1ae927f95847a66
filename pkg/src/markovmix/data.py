"""Categorical panels, empirical transition estimation, and series transforms.

Panels hold ``s`` aligned integer-coded sequences; states are coded
1..m_j per column.  Chain indices in the API are 0-based (Python
convention); state labels stay 1-based because they are data, not
indices.

Also provides the series transforms used by the stock-returns pipeline:
log returns, quantile discretization into three states, and a trailing
moving average.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import DataError


@dataclass
class Panel:
    """Aligned categorical sequences, integer-coded 1..m_j per column.

    ``states`` is an (n, s) integer array.  ``labels[j][i]`` is the
    original label encoded as state ``i + 1`` in column ``j``; for
    panels built directly from integer states the labels are the states
    themselves.
    """

    states: np.ndarray
    alphabet_sizes: tuple[int, ...]
    labels: list[list] = field(default_factory=list)
    time_index: Optional[list] = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=int)
        if self.states.ndim != 2:
            raise DataError(f"panel states must be 2-D (n, s), got shape {self.states.shape}")
        n, s = self.states.shape
        if n < 2:
            raise DataError(f"panel needs at least 2 observations, got {n}")
        if len(self.alphabet_sizes) != s:
            raise DataError(
                f"alphabet_sizes has {len(self.alphabet_sizes)} entries for {s} columns"
            )
        for j, m in enumerate(self.alphabet_sizes):
            col = self.states[:, j]
            if col.min() < 1 or col.max() > m:
                raise DataError(
                    f"column {j}: states must lie in 1..{m}, "
                    f"found range [{col.min()}, {col.max()}]"
                )
            seen = np.unique(col)
            if len(seen) != m:
                missing = sorted(set(range(1, m + 1)) - set(seen.tolist()))
                raise DataError(f"column {j}: states {missing} never occur; re-encode the column")
        if not self.labels:
            self.labels = [list(range(1, m + 1)) for m in self.alphabet_sizes]
        if self.time_index is not None and len(self.time_index) != n:
            raise DataError(
                f"time index length {len(self.time_index)} does not match panel length {n}"
            )

    @property
    def n_obs(self) -> int:
        return self.states.shape[0]

    @property
    def n_chains(self) -> int:
        return self.states.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.states[:, j]

    def decode(self) -> list[list]:
        """Invert the encoding: original label columns, one list per chain."""
        return [
            [self.labels[j][state - 1] for state in self.states[:, j]]
            for j in range(self.n_chains)
        ]


@dataclass
class CovariateMatrix:
    """Real-valued covariates aligned row-for-row with a panel."""

    values: np.ndarray
    column_names: list[str]

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.ndim != 2:
            raise DataError(f"covariates must be 2-D, got shape {self.values.shape}")
        if self.values.shape[0] == 1 and self.values.shape[1] > 1 and len(self.column_names) == 1:
            # accept a single series passed as a flat vector
            self.values = self.values.T
        if not np.isfinite(self.values).all():
            raise DataError("covariates contain non-finite entries")
        if len(self.column_names) != self.values.shape[1]:
            raise DataError(
                f"{len(self.column_names)} covariate names for "
                f"{self.values.shape[1]} columns"
            )

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_covariates(self) -> int:
        return self.values.shape[1]


@dataclass
class FrequencyMatrix:
    """Transition counts from states of one chain to states of another.

    ``counts[i1 - 1, i0 - 1]`` is the number of t with the source chain
    in state i1 at t-1 and the target chain in state i0 at t.
    """

    counts: np.ndarray
    from_chain: int
    to_chain: int

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=int)
        if self.counts.ndim != 2:
            raise DataError("frequency counts must be a matrix")
        if (self.counts < 0).any():
            raise DataError("frequency counts must be non-negative")


@dataclass
class TransitionMatrix:
    """Row-stochastic conditional probabilities between two chains.

    Rows condition on the source state (chain ``from_chain`` at t-1),
    columns give the destination state (chain ``to_chain`` at t).
    """

    probs: np.ndarray
    from_chain: int
    to_chain: int

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.ndim != 2:
            raise DataError("transition probs must be a matrix")
        if (self.probs < -1e-12).any() or (self.probs > 1 + 1e-12).any():
            raise DataError("transition probabilities must lie in [0, 1]")
        rowsums = self.probs.sum(axis=1)
        if not np.allclose(rowsums, 1.0, atol=1e-12, rtol=0.0):
            worst = float(np.max(np.abs(rowsums - 1.0)))
            raise DataError(f"transition rows must sum to 1; max deviation {worst:.3e}")


def encode_sequences(
    raw: Sequence[Sequence], time_index: Optional[list] = None
) -> Panel:
    """Integer-code raw label columns into a Panel.

    Labels map to 1..m_j in first-appearance order, so two identical
    columns always get identical encodings.  The original labels are
    retained on the returned panel (``panel.labels``) for decoding.
    """
    if not raw:
        raise DataError("no columns supplied")
    lengths = {len(col) for col in raw}
    if len(lengths) != 1:
        raise DataError(f"columns have unequal lengths {sorted(lengths)}")
    n = lengths.pop()
    if n < 2:
        raise DataError("columns need at least 2 observations")

    encoded = np.empty((n, len(raw)), dtype=int)
    labels: list[list] = []
    for j, col in enumerate(raw):
        mapping: dict = {}
        for t, value in enumerate(col):
            code = mapping.setdefault(value, len(mapping) + 1)
            encoded[t, j] = code
        if len(mapping) < 2:
            raise DataError(f"column {j} is constant; no transition structure to model")
        labels.append(list(mapping.keys()))

    sizes = tuple(len(lab) for lab in labels)
    return Panel(states=encoded, alphabet_sizes=sizes, labels=labels, time_index=time_index)


def count_transitions(panel: Panel, from_chain: int, to_chain: int) -> FrequencyMatrix:
    """Count lag-one transitions from one chain's states to another's.

    counts[i1-1, i0-1] = #{t : source chain at t-1 is i1 and target
    chain at t is i0}; the total count is n - 1.
    """
    _check_chain(panel, from_chain)
    _check_chain(panel, to_chain)
    m_from = panel.alphabet_sizes[from_chain]
    m_to = panel.alphabet_sizes[to_chain]
    src = panel.states[:-1, from_chain] - 1
    dst = panel.states[1:, to_chain] - 1
    counts = np.zeros((m_from, m_to), dtype=int)
    np.add.at(counts, (src, dst), 1)
    return FrequencyMatrix(counts=counts, from_chain=from_chain, to_chain=to_chain)


def row_normalize(freq: FrequencyMatrix) -> TransitionMatrix:
    """Normalize transition counts row-wise into probabilities.

    Rows with no observations become uniform; this keeps every matrix
    row-stochastic and downstream likelihoods finite even when a source
    state is never the conditioning state.
    """
    counts = freq.counts.astype(float)
    totals = counts.sum(axis=1, keepdims=True)
    m_to = counts.shape[1]
    probs = np.where(totals > 0, counts / np.where(totals == 0, 1.0, totals), 1.0 / m_to)
    return TransitionMatrix(probs=probs, from_chain=freq.from_chain, to_chain=freq.to_chain)


def transition_matrix_grid(panel: Panel) -> list[list[TransitionMatrix]]:
    """Empirical transition matrices for every (target, source) chain pair.

    grid[j][k] conditions chain j's state at t on chain k's state at
    t-1 (rows index chain k states, columns chain j states).
    """
    s = panel.n_chains
    return [
        [row_normalize(count_transitions(panel, from_chain=k, to_chain=j)) for k in range(s)]
        for j in range(s)
    ]


def empirical_distribution(panel: Panel, chain: int) -> np.ndarray:
    """Relative frequency of each state of one chain over t = 1..n."""
    _check_chain(panel, chain)
    m = panel.alphabet_sizes[chain]
    counts = np.bincount(panel.states[:, chain] - 1, minlength=m).astype(float)
    return counts / counts.sum()


def log_returns(prices: Sequence[float]) -> np.ndarray:
    """Log returns in percent: 100 * ln(P_t / P_{t-1}); length n - 1."""
    prices = np.asarray(prices, dtype=float)
    if prices.ndim != 1 or len(prices) < 2:
        raise DataError("price series must be 1-D with at least 2 observations")
    if (prices <= 0).any():
        bad = int(np.argmax(prices <= 0))
        raise DataError(f"prices must be positive; found {prices[bad]} at position {bad}")
    return 100.0 * np.diff(np.log(prices))


def discretize_quantiles(
    series: Sequence[float], lower_q: float = 0.25, upper_q: float = 0.75
) -> np.ndarray:
    """Three-state discretization against estimated quantiles.

    State 1 for values at or below the lower quantile, state 3 for
    values at or above the upper quantile, state 2 strictly between.
    Quantiles use linear interpolation of order statistics (numpy's
    default, the "type 7" convention), which pins down boundary cases.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or len(series) < 4:
        raise DataError("series must be 1-D with at least 4 observations")
    if not 0 < lower_q < upper_q < 1:
        raise DataError(f"need 0 < lower_q < upper_q < 1, got ({lower_q}, {upper_q})")
    if not np.isfinite(series).all():
        raise DataError("series contains non-finite entries")
    q_low, q_high = np.quantile(series, [lower_q, upper_q], method="linear")
    if q_low == q_high:
        raise DataError(
            f"quantiles {lower_q} and {upper_q} coincide at {q_low}; "
            "discretization is meaningless for this series"
        )
    states = np.full(len(series), 2, dtype=int)
    states[series <= q_low] = 1
    states[series >= q_high] = 3
    return states


def moving_average(series: Sequence[float], window: int = 5) -> np.ndarray:
    """Trailing mean of the last ``window`` values; length n - window + 1.

    Trailing (causal) rather than centered: the smoothed value at t uses
    observations t - window + 1 .. t only.
    """
    series = np.asarray(series, dtype=float)
    if window < 1:
        raise DataError(f"window must be >= 1, got {window}")
    if window > len(series):
        raise DataError(f"window {window} exceeds series length {len(series)}")
    cumsum = np.concatenate(([0.0], np.cumsum(series)))
    return (cumsum[window:] - cumsum[:-window]) / window


def read_panel_csv(
    path, has_header: bool = False, time_col: Optional[str | int] = None
) -> Panel:
    """Read a wide-format panel CSV: one column per sequence.

    Cells may hold arbitrary category labels (integers or strings);
    they are integer-coded in first-appearance order.  Missing cells
    are an error.  ``time_col`` names (or indexes) a column to use as
    the time axis instead of a sequence.
    """
    rows, header = _read_csv_rows(path, has_header)
    if not rows:
        raise DataError(f"{path}: no data rows")
    ncol = len(rows[0])
    time_idx = _resolve_column(time_col, header, ncol, path) if time_col is not None else None

    columns: list[list] = [[] for _ in range(ncol)]
    for r, row in enumerate(rows):
        if len(row) != ncol:
            raise DataError(f"{path}: row {r + 1} has {len(row)} cells, expected {ncol}")
        for c, cell in enumerate(row):
            cell = cell.strip()
            if cell == "":
                raise DataError(f"{path}: missing cell at row {r + 1}, column {c + 1}")
            columns[c].append(cell)

    time_index = None
    if time_idx is not None:
        time_index = columns.pop(time_idx)
        if header:
            header = header[:time_idx] + header[time_idx + 1 :]
    return encode_sequences(columns, time_index=time_index)


def read_covariates_csv(path) -> CovariateMatrix:
    """Read a covariate CSV (header row required, numeric cells)."""
    rows, header = _read_csv_rows(path, has_header=True)
    if header is None or not rows:
        raise DataError(f"{path}: covariate files need a header row and data rows")
    values = np.empty((len(rows), len(header)), dtype=float)
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"{path}: row {r + 1} has {len(row)} cells, expected {len(header)}")
        for c, cell in enumerate(row):
            cell = cell.strip()
            if cell == "":
                raise DataError(f"{path}: missing cell at row {r + 1}, column {c + 1}")
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric covariate {cell!r} at row {r + 1}, column {c + 1}"
                ) from None
    return CovariateMatrix(values=values, column_names=list(header))


def _read_csv_rows(path, has_header: bool):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        all_rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not all_rows:
        raise DataError(f"{path}: empty file")
    if has_header:
        return all_rows[1:], all_rows[0]
    return all_rows, None


def _resolve_column(col, header, ncol: int, path) -> int:
    if isinstance(col, int):
        if not 0 <= col < ncol:
            raise DataError(f"{path}: column index {col} out of range 0..{ncol - 1}")
        return col
    if header is None:
        raise DataError(f"{path}: cannot address column {col!r} by name without a header")
    if col not in header:
        raise DataError(f"{path}: no column named {col!r}; header is {header}")
    return header.index(col)


def _check_chain(panel: Panel, chain: int) -> None:
    if not 0 <= chain < panel.n_chains:
        raise DataError(f"chain index {chain} out of range 0..{panel.n_chains - 1}")
