"""Clustering metrics, k-means, retrieval precision and synthetic block data."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment

from .core import EntityRegistry, EntityRelationMatrix, RelmatError, build_matrix


@dataclass(frozen=True, eq=False)
class Partition:
    labels: np.ndarray
    k: int

    @classmethod
    def from_labels(cls, labels: Iterable) -> "Partition":
        """Relabel arbitrary hashable labels to 0..k-1 in first-seen order."""
        seen: dict = {}
        out = np.array([seen.setdefault(x, len(seen)) for x in labels], dtype=np.int64)
        return cls(out, len(seen))

    def __len__(self):
        return len(self.labels)


def _labels(x) -> np.ndarray:
    if isinstance(x, Partition):
        return x.labels
    return Partition.from_labels(np.asarray(x).tolist()).labels


def contingency(a, b) -> np.ndarray:
    la, lb = _labels(a), _labels(b)
    if len(la) != len(lb):
        raise RelmatError(f"partitions differ in length: {len(la)} vs {len(lb)}")
    _, ia = np.unique(la, return_inverse=True)
    _, ib = np.unique(lb, return_inverse=True)
    table = np.zeros((ia.max() + 1 if len(ia) else 0, ib.max() + 1 if len(ib) else 0), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(a, b) -> float:
    """Mutual information normalized by the geometric mean of the two entropies."""
    table = contingency(a, b)
    n = int(table.sum())
    if n == 0:
        raise RelmatError("empty partitions")
    ha = _entropy(table.sum(axis=1), n)
    hb = _entropy(table.sum(axis=0), n)
    if ha == 0.0 or hb == 0.0:
        # both trivial means identical single-cluster partitions
        return 1.0 if ha == hb else 0.0
    nz = table > 0
    pij = table[nz] / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0))[nz] / (n * n)
    mi = float((pij * np.log(pij / outer)).sum())
    return max(0.0, min(1.0, mi / math.sqrt(ha * hb)))


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1) / 2


def ari(a, b) -> float:
    table = contingency(a, b)
    n = int(table.sum())
    sum_ij = _comb2(table).sum()
    sum_a = _comb2(table.sum(axis=1)).sum()
    sum_b = _comb2(table.sum(axis=0)).sum()
    total = n * (n - 1) / 2
    expected = sum_a * sum_b / total if total else 0.0
    max_index = (sum_a + sum_b) / 2
    if max_index == expected:
        # degenerate: both partitions all-one-cluster or all-singletons
        return 1.0 if sum_a == sum_b else 0.0
    return float((sum_ij - expected) / (max_index - expected))


def acc(pred, truth) -> float:
    """Best-match accuracy over one-to-one maps from predicted to true labels."""
    table = contingency(pred, truth)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / table.sum())


def precision_at_k(ranked: Sequence, relevant, k: int) -> float:
    if k < 1:
        raise RelmatError("k must be >= 1")
    rel = set(relevant)
    return sum(1 for x in list(ranked)[:k] if x in rel) / k


# ---- k-means --------------------------------------------------------------


@dataclass
class KMeansResult:
    partition: Partition
    centers: np.ndarray
    wcss: float
    history: list[float]  # objective after each Lloyd step of the winning restart


def _row_sq(x):
    if sparse.issparse(x):
        return np.asarray(x.multiply(x).sum(1)).ravel()
    return (x * x).sum(1)


def _row(x, i):
    r = x[i]
    return r.toarray().ravel() if sparse.issparse(r) else r


def _sq_dists(x, c, x_sq=None):
    x_sq = _row_sq(x) if x_sq is None else x_sq
    d = x_sq[:, None] - 2 * np.asarray(x @ c.T) + (c * c).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _kmeanspp(x, k, rng, x_sq):
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = _row(x, rng.integers(n))
    d = _sq_dists(x, centers[:1], x_sq)[:, 0]
    for i in range(1, k):
        total = d.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(d), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers[i] = _row(x, idx)
        d = np.minimum(d, _sq_dists(x, centers[i : i + 1], x_sq)[:, 0])
    return centers


def _means(x, labels, k):
    n = x.shape[0]
    onehot = sparse.csr_matrix((np.ones(n), (labels, np.arange(n))), shape=(k, n))
    sums = onehot @ x
    sums = sums.toarray() if sparse.issparse(sums) else np.asarray(sums)
    return sums, np.bincount(labels, minlength=k)


def _lloyd(x, centers, max_iter, x_sq):
    n = x.shape[0]
    labels = None
    history = []
    for _ in range(max_iter):
        d = _sq_dists(x, centers, x_sq)
        new = d.argmin(1)
        history.append(float(d[np.arange(n), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        sums, counts = _means(x, labels, len(centers))
        for j in range(len(centers)):
            if counts[j]:
                centers[j] = sums[j] / counts[j]
            else:
                # empty cluster: move it to the point farthest from its center
                far = d[np.arange(n), labels].argmax()
                centers[j] = _row(x, far)
                labels[far] = j
    d = _sq_dists(x, centers, x_sq)
    labels = d.argmin(1)
    wcss = float(d[np.arange(n), labels].sum())
    return labels, centers, wcss, history


def kmeans(vectors, k: int, n_init: int = 10, seed: int = 0, max_iter: int = 300) -> KMeansResult:
    """Lloyd's algorithm from k-means++ seeds; keeps the restart with the lowest WCSS.

    ``vectors`` may be a dense array or a scipy sparse matrix.
    """
    x = vectors.astype(np.float64).tocsr() if sparse.issparse(vectors) else np.asarray(vectors, dtype=np.float64)
    n = x.shape[0]
    if k < 1 or k > n:
        raise RelmatError(f"k={k} must lie in [1, {n}]")
    x_sq = _row_sq(x)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, n_init)):
        labels, centers, wcss, hist = _lloyd(x, _kmeanspp(x, k, rng, x_sq), max_iter, x_sq)
        if best is None or wcss < best[2]:
            best = (labels, centers, wcss, hist)
    labels, centers, wcss, hist = best
    return KMeansResult(Partition(labels.astype(np.int64), k), centers, wcss, hist)


# ---- synthetic block matrices --------------------------------------------


@dataclass(frozen=True)
class Block:
    row_start: int
    n_rows: int
    col_start: int
    n_cols: int
    value: float = 1.0


def synth_blocks(
    registry: EntityRegistry,
    row_type: str,
    col_type: str,
    shape: tuple[int, int],
    blocks: Sequence[Block],
    name: str = "",
) -> EntityRelationMatrix:
    """Matrix made of constant rectangular blocks; entities are named ``<type><index>``."""
    n_r, n_c = shape
    cells = {}
    for b in blocks:
        if b.row_start < 0 or b.col_start < 0 or b.row_start + b.n_rows > n_r or b.col_start + b.n_cols > n_c:
            raise RelmatError(f"block {b} does not fit in a {n_r}x{n_c} matrix")
        if b.value < 0:
            raise RelmatError(f"block {b} has a negative value")
        for r in range(b.row_start, b.row_start + b.n_rows):
            for c in range(b.col_start, b.col_start + b.n_cols):
                if (r, c) in cells:
                    raise RelmatError(f"blocks overlap at ({r}, {c})")
                cells[(r, c)] = b.value
    for t, n in ((row_type, n_r), (col_type, n_c)):
        registry.ensure_type(t)
        for i in range(n):
            registry.register_entity(t, f"{t}{i}")
    rid = [registry.id_of(row_type, f"{row_type}{r}") for r in range(n_r)]
    cid = [registry.id_of(col_type, f"{col_type}{c}") for c in range(n_c)]
    trip = [(rid[r], cid[c], v) for (r, c), v in sorted(cells.items())]
    return build_matrix(registry, row_type, col_type, trip, name=name)


FOUR_CLUSTERS = ("R", "G", "B", "K")


def four_block_labels(n: int = 20) -> list[str]:
    return [FOUR_CLUSTERS[i * 4 // n] for i in range(n)]


def visualization_task(registry: EntityRegistry, row_type="A", col_type="B"):
    """20x20, four 5x5 all-ones diagonal blocks; returns (matrix, row labels, col labels)."""
    m = synth_blocks(
        registry, row_type, col_type, (20, 20),
        [Block(5 * i, 5, 5 * i, 5, 1.0) for i in range(4)], name=f"M_{row_type}{col_type}",
    )
    labels = four_block_labels(20)
    return m, labels, labels


def sampling_task(registry: EntityRegistry):
    """The two-matrix example: M_AB from co-occurrence counts, M_AC at tf-idf scale.

    M_AB has two 10x10 all-ones diagonal blocks. M_AC has a centre 10x10
    block and four corner 5x5 blocks of 0.1. Returns
    ``(m_ab, m_ac, labels)`` where ``labels`` holds the 4-way ground truth
    for type A plus the 2-way partitions induced by each matrix alone.
    """
    m_ab = synth_blocks(registry, "A", "B", (20, 20), [Block(0, 10, 0, 10), Block(10, 10, 10, 10)], name="M_AB")
    corners = [Block(r, 5, c, 5, 0.1) for r in (0, 15) for c in (0, 15)]
    m_ac = synth_blocks(registry, "A", "C", (20, 20), [Block(5, 10, 5, 10, 0.1), *corners], name="M_AC")
    four = four_block_labels(20)
    labels = {
        "four": four,
        "ab": ["RG" if x in "RG" else "BK" for x in four],
        "ac": ["RK" if x in "RK" else "GB" for x in four],
    }
    return m_ab, m_ac, labels
