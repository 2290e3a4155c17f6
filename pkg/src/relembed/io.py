"""Embedding text files: ``<count> <dim>`` header, then ``type:name f1 ... fd``."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import EntityRegistry, RelmatError
from .trainer import EmbeddingSet


def write_embeddings(emb: EmbeddingSet, path: str | Path, types=None) -> None:
    types = list(types) if types is not None else emb.types
    total = sum(emb.registry.size(t) for t in types)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{total} {emb.dim}\n")
        for t in types:
            block = emb.of_type(t)
            for name, row in zip(emb.registry.names(t), block):
                fh.write(f"{t}:{name} " + " ".join(f"{x:.9g}" for x in row.tolist()) + "\n")


def split_key(key: str) -> tuple[str, str]:
    t, sep, name = key.partition(":")
    if not sep or not t or not name:
        raise RelmatError(f"entity key {key!r} is not of the form type:name")
    return t, name


def read_embeddings(path: str | Path, dtype="float32") -> EmbeddingSet:
    registry = EntityRegistry()
    keys: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().split()
        if len(head) != 2:
            raise RelmatError(f"{path}:1: expected '<count> <dim>' header")
        count, dim = int(head[0]), int(head[1])
        vals = np.empty((count, dim), dtype=np.float64)
        n = 0
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(" ")
            if len(parts) < dim + 1 or n >= count:
                raise RelmatError(f"{path}:{lineno}: malformed embedding line")
            key = " ".join(parts[: len(parts) - dim])
            try:
                vals[n] = [float(x) for x in parts[len(parts) - dim :]]
            except ValueError:
                raise RelmatError(f"{path}:{lineno}: bad float") from None
            keys.append(split_key(key))
            n += 1
    if n != count:
        raise RelmatError(f"{path}: header announces {count} entities, found {n}")
    # group rows by type in first-seen type order
    order = []
    for t, name in keys:
        registry.ensure_type(t)
    for t in registry.type_names:
        for i, (kt, name) in enumerate(keys):
            if kt == t:
                if registry.has_entity(t, name):
                    raise RelmatError(f"{path}: duplicate entity {t}:{name}")
                registry.register_entity(t, name)
                order.append(i)
    offsets, _ = EmbeddingSet.layout(registry)
    return EmbeddingSet(registry, vals[order].astype(dtype), offsets)
