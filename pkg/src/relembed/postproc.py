"""Per-type centering, distance export, cosine retrieval and PMI."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import EntityRelationMatrix, RelmatError
from .trainer import EmbeddingSet


def type_means(emb: EmbeddingSet, types: Sequence[str] | None = None) -> dict[str, np.ndarray]:
    out = {}
    if types is None:
        types = [t for t in emb.types if emb.registry.size(t)]
    for t in types:
        block = emb.of_type(t)
        if len(block) == 0:
            raise RelmatError(f"type {t!r} has no entities")
        out[t] = block.astype(np.float64).mean(axis=0)
    return out


def center_by_type(emb: EmbeddingSet, types: Sequence[str] | None = None) -> EmbeddingSet:
    """Subtract each type's mean from its own rows. Context types count as their own types."""
    out = emb.copy()
    vecs = out.vectors.astype(np.float64)
    for t, mu in type_means(emb, types).items():
        o = out.offsets[t]
        vecs[o : o + emb.registry.size(t)] -= mu
    out.vectors = vecs.astype(emb.vectors.dtype)
    return out


def stacked(emb: EmbeddingSet, type_list: Sequence[str]) -> tuple[np.ndarray, list[tuple[str, str]]]:
    rows, keys = [], []
    for t in type_list:
        rows.append(emb.of_type(t).astype(np.float64))
        keys.extend((t, n) for n in emb.registry.names(t))
    return np.concatenate(rows), keys


def pairwise_distances(emb: EmbeddingSet, type_list: Sequence[str]) -> tuple[np.ndarray, list[tuple[str, str]]]:
    """Euclidean distances with rows/columns grouped by type in ``type_list`` order."""
    x, keys = stacked(emb, type_list)
    sq = (x * x).sum(1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    d = np.sqrt(np.maximum(d2, 0.0))
    d = (d + d.T) / 2
    np.fill_diagonal(d, 0.0)
    return d, keys


def nearest_neighbors(
    emb: EmbeddingSet,
    query,
    target_type: str,
    k: int,
) -> list[tuple[str, float]]:
    """Top-k entities of ``target_type`` by cosine similarity to ``query``.

    ``query`` is either a ``(type, name)`` pair or a raw vector. A query
    entity of ``target_type`` is left out of its own ranking. Ties go to
    the lower entity id.
    """
    exclude = -1
    if isinstance(query, tuple) and len(query) == 2 and isinstance(query[0], str):
        qt, qn = query
        q = emb.vector(qt, qn).astype(np.float64)
        if qt == target_type:
            exclude = emb.registry.id_of(qt, qn)
    else:
        q = np.asarray(query, dtype=np.float64)
    qn_ = np.linalg.norm(q)
    if qn_ == 0:
        raise RelmatError("query vector is zero")
    block = emb.of_type(target_type).astype(np.float64)
    if len(block) == 0:
        raise RelmatError(f"type {target_type!r} has no entities")
    norms = np.linalg.norm(block, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = np.where(norms > 0, block @ q / (norms * qn_), 0.0)
    ids = np.arange(len(block))
    if exclude >= 0:
        keep = ids != exclude
        ids, scores = ids[keep], scores[keep]
    order = np.lexsort((ids, -scores))[:k]
    names = emb.registry.names(target_type)
    return [(names[i], float(scores_i)) for i, scores_i in zip(ids[order], scores[order])]


def pmi(m: EntityRelationMatrix, i: int, j: int) -> float:
    """log P[i,j] / (P[i,.] P[.,j]) from the normalized matrix."""
    hit = np.flatnonzero((m.rows == i) & (m.cols == j))
    if hit.size == 0:
        raise RelmatError(f"PMI undefined: cell ({i}, {j}) is zero")
    mass = m.total_mass
    p_ij = m.weights[hit[0]] / mass
    p_i = math.fsum(m.weights[m.rows == i].tolist()) / mass
    p_j = math.fsum(m.weights[m.cols == j].tolist()) / mass
    return math.log(p_ij / (p_i * p_j))


# ---- exports ---------------------------------------------------------------


def write_distances(d: np.ndarray, type_list: Sequence[str], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("#dist " + ",".join(type_list) + "\n")
        for row in d:
            fh.write(" ".join(f"{x:.9g}" for x in row.tolist()) + "\n")


def write_neighbors(results: dict[str, list[tuple[str, float]]], target_type: str, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for query, ranked in results.items():
            for rank, (name, score) in enumerate(ranked, 1):
                fh.write(f"{query}\t{rank}\t{target_type}:{name}\t{score:.9g}\n")
