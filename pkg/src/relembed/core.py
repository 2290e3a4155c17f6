"""Entity registry and the sparse entity-relation-matrix data model."""

from __future__ import annotations

import math
from functools import cached_property
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

CONTEXT_SUFFIX = "-ctx"


class RelmatError(ValueError):
    """Invalid input data (bad ids, negative weights, malformed files)."""


class NumericError(ArithmeticError):
    """Training produced a non-finite value."""


@dataclass(frozen=True)
class EntityType:
    name: str
    role: str = "target"
    aliases: str | None = None  # target type a context type stands in for

    def __post_init__(self):
        if self.role not in ("target", "context"):
            raise RelmatError(f"unknown role {self.role!r}")
        if self.role == "context" and not self.aliases:
            raise RelmatError(f"context type {self.name!r} must alias a target type")
        if self.role == "target" and self.aliases:
            raise RelmatError(f"target type {self.name!r} cannot alias another type")

    @property
    def semantic_type(self) -> str:
        return self.aliases if self.role == "context" else self.name


def context_name(type_name: str) -> str:
    return type_name + CONTEXT_SUFFIX


class EntityRegistry:
    """Per-type bidirectional map between entity names and dense ids."""

    def __init__(self):
        self._types: dict[str, EntityType] = {}
        self._names: dict[str, list[str]] = {}
        self._ids: dict[str, dict[str, int]] = {}

    def add_type(self, name: str, role: str = "target", aliases: str | None = None) -> EntityType:
        if not name or any(ch.isspace() or ch == ":" for ch in name):
            raise RelmatError(f"type names may not be empty or contain whitespace or ':': {name!r}")
        etype = EntityType(name, role, aliases)
        existing = self._types.get(name)
        if existing is not None:
            if existing != etype:
                raise RelmatError(f"type {name!r} already registered as {existing}")
            return existing
        if etype.role == "context":
            target = self._types.get(etype.aliases)
            if target is None or target.role != "target":
                raise RelmatError(f"context type {name!r} aliases unknown target type {etype.aliases!r}")
        self._types[name] = etype
        self._names[name] = []
        self._ids[name] = {}
        return etype

    def add_context_type(self, target: str) -> EntityType:
        if target not in self._types:
            self.add_type(target)
        return self.add_type(context_name(target), role="context", aliases=target)

    def ensure_type(self, name: str) -> EntityType:
        """Register ``name`` if absent; ``X-ctx`` names become context aliases of ``X``."""
        if name in self._types:
            return self._types[name]
        if name.endswith(CONTEXT_SUFFIX) and len(name) > len(CONTEXT_SUFFIX):
            return self.add_context_type(name[: -len(CONTEXT_SUFFIX)])
        return self.add_type(name)

    def register_entity(self, type_name: str, entity_name: str) -> int:
        try:
            ids = self._ids[type_name]
        except KeyError:
            raise RelmatError(f"unknown entity type {type_name!r}") from None
        eid = ids.get(entity_name)
        if eid is None:
            eid = len(ids)
            ids[entity_name] = eid
            self._names[type_name].append(entity_name)
        return eid

    def register_many(self, type_name: str, names: Iterable[str]) -> np.ndarray:
        return np.array([self.register_entity(type_name, n) for n in names], dtype=np.int64)

    def id_of(self, type_name: str, entity_name: str) -> int:
        try:
            return self._ids[type_name][entity_name]
        except KeyError:
            raise RelmatError(f"unknown entity {type_name}:{entity_name}") from None

    def has_entity(self, type_name: str, entity_name: str) -> bool:
        return entity_name in self._ids.get(type_name, {})

    def name_of(self, type_name: str, eid: int) -> str:
        return self._names[type_name][eid]

    def names(self, type_name: str) -> list[str]:
        return list(self._names[type_name])

    def size(self, type_name: str) -> int:
        if type_name not in self._types:
            raise RelmatError(f"unknown entity type {type_name!r}")
        return len(self._names[type_name])

    def get_type(self, type_name: str) -> EntityType:
        try:
            return self._types[type_name]
        except KeyError:
            raise RelmatError(f"unknown entity type {type_name!r}") from None

    @property
    def types(self) -> list[EntityType]:
        return list(self._types.values())

    @property
    def type_names(self) -> list[str]:
        return list(self._types)

    def __contains__(self, type_name: str) -> bool:
        return type_name in self._types

    def __len__(self) -> int:
        return sum(len(v) for v in self._names.values())

    def entities(self) -> Iterator[tuple[str, int, str]]:
        for t, names in self._names.items():
            for i, n in enumerate(names):
                yield t, i, n


@dataclass(frozen=True, eq=False)
class EntityRelationMatrix:
    """Sparse nonnegative matrix between a row type and a column type.

    Cells are stored as parallel ``rows``/``cols``/``weights`` arrays sorted
    row-major; every weight is strictly positive.
    """

    row_type: str
    col_type: str
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    n_rows: int
    n_cols: int
    alpha: float = 1.0
    name: str = ""

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise RelmatError(f"alpha must lie in [0, 1], got {self.alpha}")

    @property
    def nnz(self) -> int:
        return len(self.weights)

    @cached_property
    def total_mass(self) -> float:
        return total_mass(self)

    @property
    def triplets(self) -> list[tuple[int, int, float]]:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.weights.tolist()))

    def with_alpha(self, alpha: float) -> "EntityRelationMatrix":
        return EntityRelationMatrix(
            self.row_type, self.col_type, self.rows, self.cols, self.weights,
            self.n_rows, self.n_cols, float(alpha), self.name,
        )

    def to_scipy(self):
        from scipy import sparse

        return sparse.csr_matrix((self.weights, (self.rows, self.cols)), shape=(self.n_rows, self.n_cols))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols))
        out[self.rows, self.cols] = self.weights
        return out


def total_mass(m: EntityRelationMatrix) -> float:
    # fsum: exact, independent of cell order
    return math.fsum(m.weights.tolist())


def build_matrix(
    registry: EntityRegistry,
    row_type: str,
    col_type: str,
    triplets: Iterable[tuple[int, int, float]] | tuple[np.ndarray, np.ndarray, np.ndarray],
    alpha: float = 1.0,
    name: str = "",
) -> EntityRelationMatrix:
    """Validate triplets and build a matrix; zero cells dropped, duplicates summed."""
    n_rows = registry.size(row_type)
    n_cols = registry.size(col_type)
    if isinstance(triplets, tuple) and len(triplets) == 3 and isinstance(triplets[0], np.ndarray):
        rows, cols, weights = triplets
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
    else:
        trip = list(triplets)
        rows = np.array([t[0] for t in trip], dtype=np.int64)
        cols = np.array([t[1] for t in trip], dtype=np.int64)
        weights = np.array([t[2] for t in trip], dtype=np.float64)
    if not (len(rows) == len(cols) == len(weights)):
        raise RelmatError("rows, cols and weights differ in length")

    bad = np.flatnonzero(~np.isfinite(weights) | (weights < 0))
    if bad.size:
        k = bad[0]
        raise RelmatError(
            f"invalid weight {weights[k]!r} at cell ({rows[k]}, {cols[k]}) of {row_type}x{col_type}"
        )
    bad = np.flatnonzero((rows < 0) | (rows >= n_rows) | (cols < 0) | (cols >= n_cols))
    if bad.size:
        k = bad[0]
        raise RelmatError(
            f"cell ({rows[k]}, {cols[k]}) out of range for {n_rows}x{n_cols} {row_type}x{col_type}"
        )

    keep = weights > 0
    rows, cols, weights = rows[keep], cols[keep], weights[keep]
    if weights.size == 0:
        raise RelmatError(f"matrix {row_type}x{col_type} has no positive cells")

    key = rows * n_cols + cols
    order = np.argsort(key, kind="stable")
    key, weights = key[order], weights[order]
    uniq, start = np.unique(key, return_index=True)
    if len(uniq) != len(key):
        weights = np.add.reduceat(weights, start)
    return EntityRelationMatrix(
        row_type, col_type, uniq // n_cols, uniq % n_cols, weights, n_rows, n_cols, float(alpha), name
    )


@dataclass
class MatrixSet:
    registry: EntityRegistry
    matrices: list[EntityRelationMatrix] = field(default_factory=list)

    def __post_init__(self):
        for m in self.matrices:
            self._check(m)

    def _check(self, m: EntityRelationMatrix):
        for t in (m.row_type, m.col_type):
            if t not in self.registry:
                raise RelmatError(f"matrix type {t!r} is not registered")
        if m.n_rows > self.registry.size(m.row_type) or m.n_cols > self.registry.size(m.col_type):
            raise RelmatError(f"matrix {m.row_type}x{m.col_type} larger than registered types")

    def add(self, m: EntityRelationMatrix) -> None:
        self._check(m)
        self.matrices.append(m)

    def __iter__(self):
        return iter(self.matrices)

    def __len__(self):
        return len(self.matrices)


# ---- text formats -------------------------------------------------------


def format_weight(w: float) -> str:
    return repr(float(w))


def write_matrix(m: EntityRelationMatrix, registry: EntityRegistry, path: str | Path) -> None:
    rnames = registry.names(m.row_type)
    cnames = registry.names(m.col_type)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#matrix {m.row_type} {m.col_type} alpha={format_weight(m.alpha)}\n")
        for r, c, w in zip(m.rows.tolist(), m.cols.tolist(), m.weights.tolist()):
            fh.write(f"{rnames[r]}\t{cnames[c]}\t{format_weight(w)}\n")


def _check_name(name: str, where: str) -> None:
    if not name or any(ch in name for ch in "\t\n"):
        raise RelmatError(f"{where}: empty or malformed entity name {name!r}")


def read_matrix(path: str | Path, registry: EntityRegistry, name: str | None = None) -> EntityRelationMatrix:
    """Parse a matrix file, registering any unseen types and entities."""
    path = Path(path)
    rows: list[int] = []
    cols: list[int] = []
    weights: list[float] = []
    header = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if header is None:
                parts = line.split()
                if len(parts) not in (3, 4) or parts[0] != "#matrix":
                    raise RelmatError(f"{path}:{lineno}: expected '#matrix <row_type> <col_type> alpha=<float>'")
                alpha = 1.0
                if len(parts) == 4:
                    if not parts[3].startswith("alpha="):
                        raise RelmatError(f"{path}:{lineno}: bad header field {parts[3]!r}")
                    try:
                        alpha = float(parts[3][6:])
                    except ValueError:
                        raise RelmatError(f"{path}:{lineno}: bad alpha {parts[3]!r}") from None
                header = (parts[1], parts[2], alpha)
                registry.ensure_type(parts[1])
                registry.ensure_type(parts[2])
                continue
            if line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise RelmatError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}")
            _check_name(fields[0], f"{path}:{lineno}")
            _check_name(fields[1], f"{path}:{lineno}")
            try:
                w = float(fields[2])
            except ValueError:
                raise RelmatError(f"{path}:{lineno}: bad weight {fields[2]!r}") from None
            if not math.isfinite(w) or w < 0:
                raise RelmatError(f"{path}:{lineno}: invalid weight {fields[2]!r}")
            rows.append(registry.register_entity(header[0], fields[0]))
            cols.append(registry.register_entity(header[1], fields[1]))
            weights.append(w)
    if header is None:
        raise RelmatError(f"{path}: empty matrix file")
    row_type, col_type, alpha = header
    return build_matrix(
        registry, row_type, col_type,
        (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), np.array(weights)),
        alpha=alpha, name=name if name is not None else path.stem,
    )


def write_vocab(registry: EntityRegistry, path: str | Path, types: Sequence[str] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in types or registry.type_names:
            for n in registry.names(t):
                fh.write(f"{t}\t{n}\n")


def read_vocab(path: str | Path, registry: EntityRegistry | None = None) -> EntityRegistry:
    registry = registry if registry is not None else EntityRegistry()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise RelmatError(f"{path}:{lineno}: expected '<type>\\t<name>'")
            _check_name(fields[1], f"{path}:{lineno}")
            registry.ensure_type(fields[0])
            registry.register_entity(fields[0], fields[1])
    return registry
