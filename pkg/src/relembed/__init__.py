"""Entity embeddings learned from sets of entity-relation matrices."""

from .core import (
    EntityRegistry,
    EntityRelationMatrix,
    EntityType,
    MatrixSet,
    NumericError,
    RelmatError,
    build_matrix,
    read_matrix,
    total_mass,
    write_matrix,
)
from .trainer import EmbeddingSet, TrainConfig, init_embeddings, train

__all__ = [
    "EntityRegistry",
    "EntityRelationMatrix",
    "EntityType",
    "MatrixSet",
    "NumericError",
    "RelmatError",
    "build_matrix",
    "read_matrix",
    "total_mass",
    "write_matrix",
    "EmbeddingSet",
    "TrainConfig",
    "init_embeddings",
    "train",
]
