"""Alias-method pair sampling and negative sampling.

Tables follow Vose's construction: cells are scaled so the mean mass is 1,
then small and large cells are paired off from two work lists. A draw costs
one uniform column index plus one coin flip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import EntityRegistry, EntityRelationMatrix, MatrixSet, RelmatError


@njit(cache=True)
def _vose(scaled):
    n = scaled.shape[0]
    prob = np.ones(n)
    alias = np.arange(n)
    small = np.empty(n, dtype=np.int64)
    large = np.empty(n, dtype=np.int64)
    ns = 0
    nl = 0
    for i in range(n):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        l = large[nl - 1]
        prob[s] = scaled[s]
        alias[s] = l
        # (l + s) - 1 rather than l - (1 - s): fewer cancellation errors
        scaled[l] = (scaled[l] + scaled[s]) - 1.0
        if scaled[l] < 1.0:
            nl -= 1
            small[ns] = l
            ns += 1
    # leftovers are 1 up to rounding
    return prob, alias


@dataclass(frozen=True, eq=False)
class AliasTable:
    prob: np.ndarray
    alias: np.ndarray
    rows: np.ndarray
    cols: np.ndarray

    def __len__(self):
        return len(self.prob)

    def probabilities(self) -> np.ndarray:
        """Per-cell probability implied by the table."""
        n = len(self.prob)
        p = self.prob.copy()
        np.add.at(p, self.alias, 1.0 - self.prob)
        return p / n

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Cell indices for ``size`` independent draws."""
        n = len(self.prob)
        k = rng.integers(0, n, size=size)
        coin = rng.random(size)
        return np.where(coin < self.prob[k], k, self.alias[k])


def alias_from_weights(weights: np.ndarray, rows=None, cols=None) -> AliasTable:
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise RelmatError("alias table needs a nonempty 1-d weight vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise RelmatError("alias table weights must be finite and nonnegative")
    total = w.sum()
    if total <= 0:
        raise RelmatError("alias table needs positive total mass")
    prob, alias = _vose(w * (len(w) / total))
    idx = np.arange(len(w))
    return AliasTable(
        prob, alias,
        idx if rows is None else np.asarray(rows),
        idx if cols is None else np.asarray(cols),
    )


def build_alias_table(m: EntityRelationMatrix) -> AliasTable:
    return alias_from_weights(m.weights, m.rows, m.cols)


def sample_pair(table: AliasTable, rng: np.random.Generator) -> tuple[int, int]:
    n = len(table.prob)
    k = int(rng.integers(0, n))
    if rng.random() >= table.prob[k]:
        k = int(table.alias[k])
    return int(table.rows[k]), int(table.cols[k])


def sample_pairs(table: AliasTable, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
    k = table.draw(rng, size)
    return table.rows[k], table.cols[k]


def sample_negatives(registry: EntityRegistry, col_type: str, n_neg: int, rng: np.random.Generator) -> np.ndarray:
    n = registry.size(col_type)
    if n == 0:
        raise RelmatError(f"cannot draw negatives from empty type {col_type!r}")
    return rng.integers(0, n, size=n_neg)


@dataclass(frozen=True, eq=False)
class GlobalTable:
    """One table over every cell of every matrix, normalized by the summed mass."""

    table: AliasTable
    matrix_index: np.ndarray  # per cell
    local_cell: np.ndarray  # per cell, index within its own matrix


def build_global_table(matrix_set: MatrixSet) -> GlobalTable:
    weights = np.concatenate([m.weights for m in matrix_set])
    mid = np.concatenate([np.full(m.nnz, i) for i, m in enumerate(matrix_set)])
    local = np.concatenate([np.arange(m.nnz) for m in matrix_set])
    return GlobalTable(alias_from_weights(weights), mid, local)


def unigram_table(m: EntityRelationMatrix, n_cols: int, power: float) -> AliasTable:
    """Column-marginal^power table for smoothed negative sampling."""
    marg = np.bincount(m.cols, weights=m.weights, minlength=n_cols)
    return alias_from_weights(marg**power)
