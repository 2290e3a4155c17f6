"""Relation-matrix recipes for tables and text corpora."""

from __future__ import annotations

import csv
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import EntityRegistry, EntityRelationMatrix, RelmatError, build_matrix, context_name

_TOKEN = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on runs of non-alphanumeric characters."""
    return _TOKEN.findall(text.lower())


@dataclass
class TabularSource:
    rows: list[dict]

    @property
    def attributes(self) -> list[str]:
        return list(self.rows[0]) if self.rows else []

    def require(self, *attrs: str) -> None:
        have = set(self.attributes)
        for a in attrs:
            if a not in have:
                raise RelmatError(f"unknown attribute {a!r}; table has {sorted(have)}")

    def values(self, attr: str) -> list:
        return [r.get(attr) for r in self.rows]


def read_table(path: str | Path, delimiter: str = "\t") -> TabularSource:
    """Delimited file with a header row; empty fields become missing values."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise RelmatError(f"{path}: empty table") from None
        rows = []
        for lineno, rec in enumerate(reader, 2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise RelmatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            rows.append({h: (v if v.strip() != "" else None) for h, v in zip(header, rec)})
    return TabularSource(rows)


def _missing(v) -> bool:
    return v is None or (isinstance(v, float) and math.isnan(v))


def cooccurrence(
    registry: EntityRegistry,
    source: TabularSource,
    attr_a: str,
    attr_b: str,
    row_type: str | None = None,
    col_type: str | None = None,
) -> EntityRelationMatrix:
    """Count records holding each (attr_a, attr_b) value pair."""
    if attr_a == attr_b:
        raise RelmatError("co-occurrence of an attribute with itself; use coattendance")
    source.require(attr_a, attr_b)
    row_type = row_type or attr_a
    col_type = col_type or attr_b
    registry.ensure_type(row_type)
    registry.ensure_type(col_type)
    counts: Counter = Counter()
    for rec in source.rows:
        a, b = rec.get(attr_a), rec.get(attr_b)
        if _missing(a) or _missing(b):
            continue
        counts[(registry.register_entity(row_type, str(a)), registry.register_entity(col_type, str(b)))] += 1
    if not counts:
        raise RelmatError(f"no record has both {attr_a!r} and {attr_b!r}")
    return build_matrix(registry, row_type, col_type, [(r, c, float(n)) for (r, c), n in counts.items()],
                        name=f"{row_type}_{col_type}")


def tfidf_transform(m: EntityRelationMatrix, registry: EntityRegistry) -> EntityRelationMatrix:
    """Rows as documents, columns as terms: ``tf * ln(n_rows / df)``.

    Columns present in every row get idf 0 and vanish.
    """
    n_rows = m.n_rows
    df = np.bincount(m.cols, minlength=m.n_cols)
    idf = np.zeros(m.n_cols)
    seen = df > 0
    idf[seen] = np.log(n_rows / df[seen])
    w = m.weights * idf[m.cols]
    if not np.any(w > 0):
        raise RelmatError("tf-idf is zero everywhere: every column occurs in every row")
    return build_matrix(registry, m.row_type, m.col_type, (m.rows, m.cols, w), alpha=m.alpha,
                        name=f"{m.name}_tfidf" if m.name else "tfidf")


def coattendance(
    registry: EntityRegistry,
    source: TabularSource,
    attr_a: str,
    via_attr: str,
    row_type: str | None = None,
) -> EntityRelationMatrix:
    """Cell (a1, a2) = number of distinct ``via_attr`` values shared by a1 and a2, a1 != a2.

    Columns live in the context alias ``<row_type>-ctx`` with ids aligned to the rows.
    """
    if attr_a == via_attr:
        raise RelmatError("coattendance needs two different attributes")
    source.require(attr_a, via_attr)
    row_type = row_type or attr_a
    registry.ensure_type(row_type)
    ctx = registry.add_context_type(row_type).name
    members: dict[str, set[int]] = {}
    for rec in source.rows:
        a, v = rec.get(attr_a), rec.get(via_attr)
        if _missing(a) or _missing(v):
            continue
        members.setdefault(str(v), set()).add(registry.register_entity(row_type, str(a)))
    for name in registry.names(row_type):
        registry.register_entity(ctx, name)
    counts: Counter = Counter()
    for group in members.values():
        ids = sorted(group)
        for i in ids:
            for j in ids:
                if i != j:
                    counts[(i, j)] += 1
    if not counts:
        raise RelmatError(f"no two {attr_a!r} values share a {via_attr!r} value")
    trip = [(i, registry.id_of(ctx, registry.name_of(row_type, j)), float(n)) for (i, j), n in counts.items()]
    return build_matrix(registry, row_type, ctx, trip, name=f"{row_type}_coattend_{via_attr}")


def similarity_matrix(
    registry: EntityRegistry,
    type_name: str,
    features: Mapping[str, Sequence[float]] | tuple[Sequence[str], np.ndarray],
    threshold: float = 0.0,
    top_k: int | None = 100,
) -> EntityRelationMatrix:
    """Cosine similarity between entities of one type, columns in the context alias.

    Only cells with cosine above ``threshold`` are kept (negatives clamp to
    0 and so never survive); ``top_k`` keeps the strongest cells per row.
    """
    if isinstance(features, tuple):
        names, x = list(features[0]), np.asarray(features[1], dtype=np.float64)
    else:
        names = list(features)
        x = np.asarray([features[n] for n in names], dtype=np.float64)
    if x.ndim != 2 or len(x) != len(names):
        raise RelmatError("features must be one equal-length vector per entity")
    norms = np.linalg.norm(x, axis=1)
    if not np.any(norms > 0):
        raise RelmatError("all feature vectors are zero")
    registry.ensure_type(type_name)
    ctx = registry.add_context_type(type_name).name
    rid = registry.register_many(type_name, names)
    cid = registry.register_many(ctx, names)
    unit = np.zeros_like(x)
    nz = norms > 0
    unit[nz] = x[nz] / norms[nz, None]
    rows, cols, vals = [], [], []
    step = 1024
    for lo in range(0, len(x), step):
        sim = unit[lo : lo + step] @ unit.T
        sim = np.clip(sim, 0.0, 1.0)
        for i in range(sim.shape[0]):
            s = sim[i]
            s[lo + i] = 0.0
            s[~nz] = 0.0
            if not nz[lo + i]:
                continue
            keep = np.flatnonzero(s > max(threshold, 0.0))
            if top_k is not None and len(keep) > top_k:
                order = np.lexsort((keep, -s[keep]))[:top_k]
                keep = np.sort(keep[order])
            rows.append(np.full(len(keep), rid[lo + i]))
            cols.append(cid[keep])
            vals.append(s[keep])
    if not rows or sum(len(r) for r in rows) == 0:
        raise RelmatError("no pair of entities exceeds the similarity threshold")
    return build_matrix(registry, type_name, ctx, (np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)),
                        name=f"{type_name}_similarity")


# ---- corpora --------------------------------------------------------------


def _as_tokens(corpus: Iterable) -> list[list[str]]:
    docs = [tokenize(d) if isinstance(d, str) else list(d) for d in corpus]
    if not docs:
        raise RelmatError("empty corpus")
    return docs


def build_vocab(docs: Sequence[Sequence[str]], vocab_size: int | None) -> list[str]:
    """Most frequent tokens; ties keep first-occurrence order."""
    counts: Counter = Counter()
    for d in docs:
        counts.update(d)
    # Counter preserves insertion order, and sorted() is stable
    ranked = sorted(counts, key=lambda w: -counts[w])
    return ranked if vocab_size is None else ranked[:vocab_size]


def word_context(
    registry: EntityRegistry,
    corpus: Iterable,
    window: int,
    vocab_size: int | None = None,
    word_type: str = "word",
) -> EntityRelationMatrix:
    """Target-word x context-word counts within ``window`` positions, both directions."""
    if window < 1:
        raise RelmatError("window must be >= 1")
    docs = _as_tokens(corpus)
    vocab = build_vocab(docs, vocab_size)
    if not vocab:
        raise RelmatError("corpus has no tokens")
    registry.ensure_type(word_type)
    ctx = registry.add_context_type(word_type).name
    wid = dict(zip(vocab, registry.register_many(word_type, vocab).tolist()))
    cid = dict(zip(vocab, registry.register_many(ctx, vocab).tolist()))
    n_c = registry.size(ctx)

    # OOV tokens keep their position (id -1) so windows span them
    lens = [len(d) for d in docs]
    flat_w = np.fromiter((wid.get(t, -1) for d in docs for t in d), dtype=np.int64, count=sum(lens))
    flat_c = np.fromiter((cid.get(t, -1) for d in docs for t in d), dtype=np.int64, count=sum(lens))
    doc_id = np.repeat(np.arange(len(docs)), lens)
    keys = []
    for off in range(1, min(window, len(flat_w) - 1) + 1):
        a = slice(0, len(flat_w) - off)
        b = slice(off, len(flat_w))
        ok = (doc_id[a] == doc_id[b]) & (flat_w[a] >= 0) & (flat_w[b] >= 0)
        left, right = np.flatnonzero(ok), np.flatnonzero(ok) + off
        keys.append(flat_w[left] * n_c + flat_c[right])
        keys.append(flat_w[right] * n_c + flat_c[left])
    keys = np.concatenate(keys) if keys else np.empty(0, dtype=np.int64)
    if keys.size == 0:
        raise RelmatError("no in-vocabulary token pairs within the window")
    uniq, counts = np.unique(keys, return_counts=True)
    return build_matrix(registry, word_type, ctx, (uniq // n_c, uniq % n_c, counts.astype(np.float64)),
                        name=f"{word_type}_context_w{window}")


def bow_matrix(
    registry: EntityRegistry,
    corpus: Iterable,
    vocab_size: int | None = None,
    doc_names: Sequence[str] | None = None,
    doc_type: str = "doc",
    word_type: str = "word",
    vocab: Sequence[str] | None = None,
) -> EntityRelationMatrix:
    """Document x word term counts over the ``vocab_size`` most frequent words."""
    docs = _as_tokens(corpus)
    if doc_names is None:
        doc_names = [f"d{i}" for i in range(len(docs))]
    if len(doc_names) != len(docs):
        raise RelmatError("one name per document required")
    vocab = list(vocab) if vocab is not None else build_vocab(docs, vocab_size)
    if not vocab:
        raise RelmatError("corpus has no tokens")
    registry.ensure_type(doc_type)
    registry.ensure_type(word_type)
    wid = dict(zip(vocab, registry.register_many(word_type, vocab).tolist()))
    did = registry.register_many(doc_type, doc_names)
    rows, cols, vals = [], [], []
    for d, toks in zip(did.tolist(), docs):
        c = Counter(wid[t] for t in toks if t in wid)
        rows.extend([d] * len(c))
        cols.extend(c.keys())
        vals.extend(float(v) for v in c.values())
    return build_matrix(registry, doc_type, word_type,
                        (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), np.array(vals)),
                        name=f"{doc_type}_{word_type}_bow")


def read_corpus(path: str | Path) -> list[list[str]]:
    with open(path, encoding="utf-8") as fh:
        return [tokenize(line) for line in fh]
