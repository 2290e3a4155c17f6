"""Synthetic experiments: sampling ablation, alpha sweep, cross-type normalization."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import EntityRegistry, MatrixSet
from .evaluation import FOUR_CLUSTERS, kmeans, nmi, sampling_task, visualization_task
from .postproc import center_by_type, pairwise_distances
from .trainer import EmbeddingSet, TrainConfig, train

# budget at which independent sampling has settled on the two-matrix task
SYNTH_CONFIG = TrainConfig(dim=16, n_iter=30, eta=0.025, batch_size=128, n_neg=5)
# the single-matrix visualization task needs longer to pull clusters apart
VIS_CONFIG = replace(SYNTH_CONFIG, n_iter=200)


@dataclass
class TwoMatrixResult:
    nmi_four: float
    nmi_ab: float
    nmi_ac: float
    emb: EmbeddingSet


def two_matrix_run(
    sampling: str = "independent",
    seed: int = 0,
    alphas: tuple[float, float] | None = None,
    config: TrainConfig = SYNTH_CONFIG,
) -> TwoMatrixResult:
    """Train on M_AB + M_AC, cluster type A with k=4 and k=2, score against each partition."""
    reg = EntityRegistry()
    m_ab, m_ac, labels = sampling_task(reg)
    cfg = replace(config, sampling=sampling, seed=seed, alphas=alphas)
    emb = train(MatrixSet(reg, [m_ab, m_ac]), cfg)
    x = emb.of_type("A")
    four = kmeans(x, 4, seed=seed).partition
    two = kmeans(x, 2, seed=seed).partition
    return TwoMatrixResult(
        nmi_four=nmi(four, labels["four"]),
        nmi_ab=nmi(two, labels["ab"]),
        nmi_ac=nmi(two, labels["ac"]),
        emb=emb,
    )


@dataclass
class ClusterDistances:
    """Mean L2 distance between every pair of (type, cluster) groups."""

    groups: list[tuple[str, str]]
    mean: np.ndarray

    def d(self, a: tuple[str, str], b: tuple[str, str]) -> float:
        return float(self.mean[self.groups.index(a), self.groups.index(b)])

    def within_lt_between(self) -> bool:
        """Same-type entities of one cluster sit closer together than to other clusters of their type."""
        types = sorted({t for t, _ in self.groups})
        for t in types:
            g = [x for x in self.groups if x[0] == t]
            within = np.mean([self.d(x, x) for x in g])
            between = np.mean([self.d(x, y) for x in g for y in g if x != y])
            if not within < between:
                return False
        return True

    def partner_closer_than_cross(self, a: str, b: str) -> list[bool]:
        """Per cluster X of type ``a``: d(X, X') below d(X, Y') for every other Y' of type ``b``."""
        out = []
        for c in FOUR_CLUSTERS:
            own = self.d((a, c), (b, c))
            out.append(all(own < self.d((a, c), (b, o)) for o in FOUR_CLUSTERS if o != c))
        return out

    def partner_nearest(self, a: str, b: str) -> list[bool]:
        """Per cluster X of type ``a``: X' is the nearest of all other clusters of either type."""
        out = []
        for c in FOUR_CLUSTERS:
            own = self.d((a, c), (b, c))
            others = [g for g in self.groups if g not in ((a, c), (b, c))]
            out.append(all(own < self.d((a, c), g) for g in others))
        return out


def cluster_distances(emb: EmbeddingSet, row_labels, col_labels, a: str = "A", b: str = "B") -> ClusterDistances:
    d, keys = pairwise_distances(emb, [a, b])
    lab = {**{(a, n): row_labels[i] for i, n in enumerate(emb.registry.names(a))},
           **{(b, n): col_labels[i] for i, n in enumerate(emb.registry.names(b))}}
    tags = [(k[0], lab[k]) for k in keys]
    groups = [(t, c) for t in (a, b) for c in FOUR_CLUSTERS]
    idx = [np.array([i for i, g in enumerate(tags) if g == grp]) for grp in groups]
    mean = np.empty((len(groups), len(groups)))
    for i, gi in enumerate(idx):
        for j, gj in enumerate(idx):
            block = d[np.ix_(gi, gj)]
            if i == j:
                # exclude self-distances from the within-cluster mean
                n = len(gi)
                mean[i, j] = block.sum() / (n * (n - 1)) if n > 1 else 0.0
            else:
                mean[i, j] = block.mean()
    return ClusterDistances(groups, mean)


@dataclass
class NormalizationResult:
    raw: ClusterDistances
    centered: ClusterDistances
    emb: EmbeddingSet


def normalization_run(seed: int = 0, config: TrainConfig = VIS_CONFIG) -> NormalizationResult:
    reg = EntityRegistry()
    m, rl, cl = visualization_task(reg)
    emb = train(MatrixSet(reg, [m]), replace(config, seed=seed))
    return NormalizationResult(
        raw=cluster_distances(emb, rl, cl),
        centered=cluster_distances(center_by_type(emb), rl, cl),
        emb=emb,
    )
