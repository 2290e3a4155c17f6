"""Skip-gram SGD over entity pairs sampled from several relation matrices."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from numba import njit, prange

from .core import EntityRegistry, MatrixSet, NumericError, RelmatError
from .sampler import (
    AliasTable,
    build_alias_table,
    build_global_table,
    unigram_table,
)

log = logging.getLogger(__name__)

DOT_CLIP = 30.0
LOG_FLOOR = 1e-12
# pairs drawn per sampling block; bounds memory for the pre-drawn negatives
BLOCK_SAMPLES = 1 << 18


@dataclass
class TrainConfig:
    n_iter: int = 1000
    n_neg: int = 5
    eta: float = 0.025
    dim: int = 100
    batch_size: int = 128
    seed: int = 0
    workers: int = 1
    sampling: str = "independent"  # or "global"
    lr_schedule: str = "constant"  # or "linear" (decays to eta/100)
    exclude_positive: bool = False
    neg_power: float = 0.0  # 0 = uniform negatives; 0.75 = word2vec smoothing
    dtype: str = "float32"
    alphas: Sequence[float] | None = None  # overrides per-matrix alpha
    probe_size: int = 256
    checkpoint_every: int = 0
    checkpoint_path: str | None = None

    def __post_init__(self):
        if self.n_iter < 0:
            raise RelmatError("n_iter must be >= 0")
        if self.n_neg < 0:
            raise RelmatError("n_neg must be >= 0")
        if not self.eta > 0:
            raise RelmatError("eta must be > 0")
        if self.dim < 1:
            raise RelmatError("dim must be >= 1")
        if self.batch_size < 1:
            raise RelmatError("batch_size must be >= 1")
        if self.workers < 1:
            raise RelmatError("workers must be >= 1")
        if self.sampling not in ("independent", "global"):
            raise RelmatError(f"unknown sampling mode {self.sampling!r}")
        if self.lr_schedule not in ("constant", "linear"):
            raise RelmatError(f"unknown lr schedule {self.lr_schedule!r}")
        if self.dtype not in ("float32", "float64"):
            raise RelmatError(f"unknown dtype {self.dtype!r}")
        if self.neg_power < 0:
            raise RelmatError("neg_power must be >= 0")
        if self.alphas is not None:
            self.alphas = tuple(float(a) for a in self.alphas)
            if any(not 0.0 <= a <= 1.0 for a in self.alphas):
                raise RelmatError("alphas must lie in [0, 1]")
        if self.checkpoint_every < 0:
            raise RelmatError("checkpoint_every must be >= 0")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class EmbeddingSet:
    """One row per registered entity; rows of a type are contiguous."""

    registry: EntityRegistry
    vectors: np.ndarray
    offsets: dict[str, int]
    loss_history: list[tuple[int, float]] = field(default_factory=list)

    @classmethod
    def layout(cls, registry: EntityRegistry) -> tuple[dict[str, int], int]:
        offsets = {}
        total = 0
        for t in registry.type_names:
            offsets[t] = total
            total += registry.size(t)
        return offsets, total

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def types(self) -> list[str]:
        return list(self.offsets)

    def of_type(self, type_name: str) -> np.ndarray:
        if type_name not in self.offsets:
            raise RelmatError(f"unknown entity type {type_name!r}")
        o = self.offsets[type_name]
        return self.vectors[o : o + self.registry.size(type_name)]

    def index(self, type_name: str, eid: int) -> int:
        return self.offsets[type_name] + eid

    def vector(self, type_name: str, name: str) -> np.ndarray:
        return self.vectors[self.index(type_name, self.registry.id_of(type_name, name))]

    def copy(self) -> "EmbeddingSet":
        return EmbeddingSet(self.registry, self.vectors.copy(), dict(self.offsets), list(self.loss_history))


def init_embeddings(registry: EntityRegistry, dim: int, rng: np.random.Generator, dtype="float32") -> EmbeddingSet:
    if dim < 1:
        raise RelmatError("dim must be >= 1")
    offsets, total = EmbeddingSet.layout(registry)
    half = 0.5 / dim
    vecs = rng.uniform(-half, half, size=(total, dim)).astype(dtype)
    return EmbeddingSet(registry, vecs, offsets)


# ---- single-pair reference math (float64) --------------------------------


def sigmoid(x):
    x = np.clip(x, -DOT_CLIP, DOT_CLIP)
    return 1.0 / (1.0 + np.exp(-x))


def loss(v_p, v_q, v_neg=()) -> float:
    """Negative-sampling objective for one positive pair and its negatives."""
    v_p = np.asarray(v_p, dtype=np.float64)
    out = -math.log(max(float(sigmoid(v_p @ np.asarray(v_q, dtype=np.float64))), LOG_FLOOR))
    for vn in v_neg:
        s = float(sigmoid(-(v_p @ np.asarray(vn, dtype=np.float64))))
        out -= math.log(max(s, LOG_FLOOR))
    return out


def update_positive(v_p, v_q, eta: float, alpha: float = 1.0):
    v_p = np.asarray(v_p, dtype=np.float64)
    v_q = np.asarray(v_q, dtype=np.float64)
    g = float(sigmoid(v_p @ v_q)) - 1.0
    step = eta * alpha * g
    return v_p - step * v_q, v_q - step * v_p


def update_negative(v_p, v_neg, eta: float, alpha: float = 1.0):
    v_p = np.asarray(v_p, dtype=np.float64)
    v_neg = np.asarray(v_neg, dtype=np.float64)
    g = float(sigmoid(v_p @ v_neg))
    step = eta * alpha * g
    return v_p - step * v_neg, v_neg - step * v_p


# ---- compiled update loop -----------------------------------------------


@njit(inline="always")
def _sig(x):
    if x > DOT_CLIP:
        x = DOT_CLIP
    elif x < -DOT_CLIP:
        x = -DOT_CLIP
    return 1.0 / (1.0 + math.exp(-x))


@njit(inline="always")
def _pair_step(vecs, a, b, step):
    # simultaneous update: both rows move using pre-update values
    acc = 0.0
    for k in range(vecs.shape[1]):
        va = vecs[a, k]
        vb = vecs[b, k]
        vecs[a, k] = va - step * vb
        vecs[b, k] = vb - step * va
        acc += vecs[a, k] + vecs[b, k]
    return acc


@njit(inline="always")
def _dot(vecs, a, b):
    s = 0.0
    for k in range(vecs.shape[1]):
        s += vecs[a, k] * vecs[b, k]
    return s


@njit(inline="always")
def _apply(vecs, p, q, negrow, scale):
    acc = _pair_step(vecs, p, q, scale * (_sig(_dot(vecs, p, q)) - 1.0))
    for j in range(negrow.shape[0]):
        n = negrow[j]
        acc += _pair_step(vecs, p, n, scale * _sig(_dot(vecs, p, n)))
    return math.isfinite(acc)


@njit(cache=True)
def sgd_block(vecs, p, q, negs, scale):
    """Apply samples in order; returns the first sample index that went non-finite, else -1."""
    for s in range(p.shape[0]):
        if scale[s] == 0.0:
            continue
        if not _apply(vecs, p[s], q[s], negs[s], scale[s]):
            return s
    return -1


@njit(cache=True, parallel=True)
def sgd_block_async(vecs, p, q, negs, scale, workers):
    """Lock-free variant: workers update the shared rows concurrently."""
    n = p.shape[0]
    bad = np.full(workers, -1, dtype=np.int64)
    for w in prange(workers):
        lo = n * w // workers
        hi = n * (w + 1) // workers
        for s in range(lo, hi):
            if scale[s] == 0.0:
                continue
            if not _apply(vecs, p[s], q[s], negs[s], scale[s]):
                bad[w] = s
                break
    for w in range(workers):
        if bad[w] >= 0:
            return bad[w]
    return -1


# ---- sampling plan --------------------------------------------------------


class _Plan:
    """Draws blocks of (p, q, negatives, alpha) in global-row coordinates."""

    def __init__(self, matrix_set: MatrixSet, offsets: dict[str, int], config: TrainConfig):
        reg = matrix_set.registry
        self.config = config
        mats = list(matrix_set)
        alphas = config.alphas if config.alphas is not None else tuple(m.alpha for m in mats)
        if len(alphas) != len(mats):
            raise RelmatError(f"{len(alphas)} alphas given for {len(mats)} matrices")
        self.alphas = np.asarray(alphas, dtype=np.float64)
        self.row_off = np.array([offsets[m.row_type] for m in mats], dtype=np.int64)
        self.col_off = np.array([offsets[m.col_type] for m in mats], dtype=np.int64)
        self.col_n = np.array([reg.size(m.col_type) for m in mats], dtype=np.int64)
        self.rows = [m.rows for m in mats]
        self.cols = [m.cols for m in mats]
        self.tables = [build_alias_table(m) for m in mats]
        self.neg_tables: list[AliasTable] | None = None
        if config.neg_power > 0:
            self.neg_tables = [unigram_table(m, reg.size(m.col_type), config.neg_power) for m in mats]
        self.glob = build_global_table(matrix_set) if config.sampling == "global" else None
        self.n_mat = len(mats)

    def negatives(self, rng, mid: np.ndarray, q_local: np.ndarray) -> np.ndarray:
        n_neg = self.config.n_neg
        size = len(mid)
        out = np.empty((size, n_neg), dtype=np.int64)
        if n_neg == 0:
            return out
        self._fill_negatives(rng, mid, out)
        if self.config.exclude_positive:
            for _ in range(1000):
                clash = (out == q_local[:, None]) & (self.col_n[mid] > 1)[:, None]
                if not clash.any():
                    break
                r, c = np.nonzero(clash)
                tmp = np.empty((len(r), 1), dtype=np.int64)
                self._fill_negatives(rng, mid[r], tmp)
                out[r, c] = tmp[:, 0]
        return out + self.col_off[mid][:, None]

    def _fill_negatives(self, rng, mid, out):
        # out receives local (within-type) ids
        shape = out.shape
        if self.neg_tables is None:
            u = rng.random(shape)
            n = self.col_n[mid][:, None]
            out[:] = np.minimum((u * n).astype(np.int64), n - 1)
            return
        for i in range(self.n_mat):
            sel = np.flatnonzero(mid == i)
            if sel.size:
                out[sel] = self.neg_tables[i].draw(rng, sel.size * shape[1]).reshape(sel.size, shape[1])

    def draw(self, rng, n_iters: int):
        b = self.config.batch_size
        if self.glob is None:
            # block layout: iteration-major, then matrix in declared order, then batch
            cells = [t.draw(rng, n_iters * b).reshape(n_iters, b) for t in self.tables]
            mid = np.broadcast_to(np.arange(self.n_mat)[None, :, None], (n_iters, self.n_mat, b)).ravel()
            local = np.stack(cells, axis=1).ravel()
        else:
            cell = self.glob.table.draw(rng, n_iters * self.n_mat * b)
            mid = self.glob.matrix_index[cell]
            local = self.glob.local_cell[cell]
        p_loc = np.empty(len(mid), dtype=np.int64)
        q_loc = np.empty(len(mid), dtype=np.int64)
        for i in range(self.n_mat):
            sel = mid == i
            p_loc[sel] = self.rows[i][local[sel]]
            q_loc[sel] = self.cols[i][local[sel]]
        negs = self.negatives(rng, mid, q_loc)
        return p_loc + self.row_off[mid], q_loc + self.col_off[mid], negs, self.alphas[mid]


def _probe_set(plan: _Plan, seed: int, size: int):
    rng = np.random.default_rng([seed, 1])
    saved = plan.config.batch_size
    plan.config.batch_size = max(1, size)
    try:
        if plan.glob is None:
            return plan.draw(rng, 1)
        # probe each matrix evenly even in global mode
        cells = [t.draw(rng, size) for t in plan.tables]
        mid = np.repeat(np.arange(plan.n_mat), size)
        p = np.concatenate([plan.rows[i][c] for i, c in enumerate(cells)])
        q = np.concatenate([plan.cols[i][c] for i, c in enumerate(cells)])
        negs = plan.negatives(rng, mid, q)
        return p + plan.row_off[mid], q + plan.col_off[mid], negs, plan.alphas[mid]
    finally:
        plan.config.batch_size = saved


def probe_loss(vectors: np.ndarray, probe) -> float:
    p, q, negs, _ = probe
    v = vectors.astype(np.float64, copy=False)
    vp = v[p]
    pos = np.einsum("ij,ij->i", vp, v[q])
    total = -np.log(np.maximum(sigmoid(pos), LOG_FLOOR))
    if negs.shape[1]:
        neg = np.einsum("ij,ikj->ik", vp, v[negs])
        total = total - np.log(np.maximum(sigmoid(-neg), LOG_FLOOR)).sum(axis=1)
    return float(total.mean())


def train(
    matrix_set: MatrixSet,
    config: TrainConfig,
    init: EmbeddingSet | None = None,
    on_checkpoint: Callable[[int, EmbeddingSet], None] | None = None,
) -> EmbeddingSet:
    """Run ``config.n_iter`` outer iterations over every matrix and return the embeddings.

    Each iteration draws ``batch_size`` pairs from each matrix (declared
    order), ``n_neg`` negatives of the column type per pair, and applies the
    positive then the negative updates scaled by ``eta * alpha``.
    """
    if len(matrix_set) == 0:
        raise RelmatError("matrix set is empty")
    registry = matrix_set.registry
    rng = np.random.default_rng(config.seed)
    emb = init.copy() if init is not None else init_embeddings(registry, config.dim, rng, config.dtype)
    if emb.vectors.shape[0] != len(registry):
        raise RelmatError("initial embeddings do not match the registry")
    plan = _Plan(matrix_set, emb.offsets, config)
    probe = _probe_set(plan, config.seed, config.probe_size)

    n_iter = config.n_iter
    marks = {max(1, round(n_iter * f / 10)) for f in range(1, 11)} if n_iter else set()
    if config.checkpoint_every:
        marks |= set(range(config.checkpoint_every, n_iter + 1, config.checkpoint_every))
    marks.add(n_iter)
    per_iter = plan.n_mat * config.batch_size
    chunk = max(1, BLOCK_SAMPLES // per_iter)

    emb.loss_history = [(0, probe_loss(emb.vectors, probe))]
    log.info("iter 0/%d probe loss %.6f", n_iter, emb.loss_history[0][1])
    probe_marks = {max(1, round(n_iter * f / 10)) for f in range(1, 11)} if n_iter else set()

    it = 0
    vecs = emb.vectors
    while it < n_iter:
        stop = min(it + chunk, min(m for m in marks if m > it))
        p, q, negs, alpha = plan.draw(rng, stop - it)
        if config.lr_schedule == "linear":
            iters = it + np.arange(len(p)) // per_iter
            lr = config.eta * (1.0 - 0.99 * iters / n_iter)
        else:
            lr = np.full(len(p), config.eta)
        scale = lr * alpha
        if config.workers > 1:
            bad = sgd_block_async(vecs, p, q, negs, scale, config.workers)
        else:
            bad = sgd_block(vecs, p, q, negs, scale)
        if bad >= 0:
            _raise_nonfinite(emb, it + bad // per_iter, p[bad], q[bad], negs[bad])
        it = stop
        if it in probe_marks:
            emb.loss_history.append((it, probe_loss(vecs, probe)))
            log.info("iter %d/%d probe loss %.6f", it, n_iter, emb.loss_history[-1][1])
        if config.checkpoint_every and it % config.checkpoint_every == 0:
            if on_checkpoint is not None:
                on_checkpoint(it, emb)
            elif config.checkpoint_path:
                from .io import write_embeddings

                write_embeddings(emb, config.checkpoint_path)
    return emb


def _raise_nonfinite(emb: EmbeddingSet, iteration: int, p, q, negs):
    culprit = p
    for g in [p, q, *negs.tolist()]:
        if not np.all(np.isfinite(emb.vectors[g])):
            culprit = g
            break
    tname = next(
        t for t, o in emb.offsets.items() if o <= culprit < o + emb.registry.size(t)
    )
    eid = int(culprit - emb.offsets[tname])
    raise NumericError(
        f"non-finite embedding at iteration {iteration}: {tname}:{emb.registry.name_of(tname, eid)}"
    )
