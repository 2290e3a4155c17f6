import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import sparse

from oracles import acc_brute, ari_brute, nmi_brute
from relembed.core import EntityRegistry, RelmatError
from relembed.evaluation import (
    Block,
    Partition,
    acc,
    ari,
    contingency,
    four_block_labels,
    kmeans,
    nmi,
    precision_at_k,
    sampling_task,
    synth_blocks,
    visualization_task,
)


labelings = st.integers(1, 6).flatmap(
    lambda k: st.lists(st.tuples(st.integers(0, k - 1), st.integers(0, 5)), min_size=2, max_size=40)
)


@given(labelings)
def test_metrics_match_brute_force(pairs):
    a = [p for p, _ in pairs]
    b = [t for _, t in pairs]
    assert abs(nmi(a, b) - nmi_brute(a, b)) <= 1e-12
    assert abs(ari(a, b) - ari_brute(a, b)) <= 1e-12
    assert abs(acc(a, b) - acc_brute(a, b)) <= 1e-12


@given(labelings)
def test_symmetry_and_relabel_invariance(pairs):
    a = [p for p, _ in pairs]
    b = [t for _, t in pairs]
    assert nmi(a, b) == pytest.approx(nmi(b, a), abs=1e-12)
    assert ari(a, b) == pytest.approx(ari(b, a), abs=1e-12)
    relabeled = [f"x{(p * 7 + 3) % 11}" for p in a]
    assert acc(relabeled, b) == pytest.approx(acc(a, b), abs=1e-12)
    assert nmi(relabeled, b) == pytest.approx(nmi(a, b), abs=1e-12)


@given(st.lists(st.integers(0, 4), min_size=2, max_size=30))
def test_identical_partitions_score_one(a):
    shifted = [x + 10 for x in a]
    assert nmi(a, shifted) == pytest.approx(1.0)
    assert ari(a, shifted) == pytest.approx(1.0)
    assert acc(a, shifted) == 1.0


def test_known_values():
    a = [0, 0, 1, 1]
    b = [0, 1, 0, 1]
    assert nmi(a, b) == 0.0
    assert ari(a, b) == pytest.approx(-0.5)
    assert acc(a, b) == 0.5
    assert contingency(a, b).tolist() == [[1, 1], [1, 1]]


def test_length_mismatch():
    with pytest.raises(RelmatError):
        nmi([0, 1], [0])


def test_precision_at_k():
    assert precision_at_k(["a", "b", "c", "d", "e"], {"a", "c", "z"}, 5) == 0.4
    with pytest.raises(RelmatError):
        precision_at_k([], set(), 0)


def _blobs(rng, k=4, per=30, d=5, spread=0.05):
    centers = rng.normal(size=(k, d)) * 5
    x = np.concatenate([c + spread * rng.normal(size=(per, d)) for c in centers])
    return x, np.repeat(np.arange(k), per)


def test_kmeans_recovers_separated_blobs(rng):
    x, y = _blobs(rng)
    res = kmeans(x, 4, seed=0)
    assert nmi(res.partition, y) == 1.0
    assert res.wcss == pytest.approx(sum(((x[y == c] - x[y == c].mean(0)) ** 2).sum() for c in range(4)))


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_kmeans_objective_non_increasing(seed, k):
    r = np.random.default_rng(seed)
    x = r.normal(size=(40, 3))
    hist = kmeans(x, k, n_init=1, seed=seed).history
    assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))


def test_kmeans_sparse_equals_dense(rng):
    x, _ = _blobs(rng, d=6)
    x[x < 0] = 0
    dense = kmeans(x, 4, seed=3)
    sp = kmeans(sparse.csr_matrix(x), 4, seed=3)
    assert np.array_equal(dense.partition.labels, sp.partition.labels)
    assert dense.wcss == pytest.approx(sp.wcss)


def test_kmeans_bad_k(rng):
    with pytest.raises(RelmatError):
        kmeans(rng.normal(size=(3, 2)), 4)


def test_kmeans_duplicate_points():
    x = np.zeros((6, 2))
    x[3:] = 1.0
    res = kmeans(x, 3, seed=0)
    assert res.wcss == 0.0


def test_four_block_generator():
    reg = EntityRegistry()
    m, rl, cl = visualization_task(reg)
    assert m.total_mass == 100.0
    assert np.all(m.to_dense().sum(1) == 5)
    assert rl[:5] == ["R"] * 5 and rl[5:10] == ["G"] * 5 and rl[10:15] == ["B"] * 5 and rl[15:] == ["K"] * 5
    assert four_block_labels(20) == rl == cl


def test_two_matrix_generator():
    reg = EntityRegistry()
    m_ab, m_ac, labels = sampling_task(reg)
    assert m_ab.nnz == 200 and m_ab.total_mass == 200.0
    assert m_ac.nnz == 200 and np.all(m_ac.weights == 0.1)
    assert m_ac.total_mass == pytest.approx(20.0, abs=1e-12)
    d = m_ac.to_dense()
    assert d[5:15, 5:15].all() and d[0:5, 0:5].all() and d[15:, 15:].all() and d[0:5, 15:].all()
    assert not d[0:5, 5:15].any()
    assert len(set(labels["four"])) == 4
    # each matrix alone merges a different pair of clusters
    assert nmi(labels["ab"], labels["ac"]) == 0.0


def test_synth_rejects_overlap_and_overflow():
    with pytest.raises(RelmatError):
        synth_blocks(EntityRegistry(), "A", "B", (4, 4), [Block(0, 3, 0, 3), Block(2, 2, 2, 2)])
    with pytest.raises(RelmatError):
        synth_blocks(EntityRegistry(), "A", "B", (4, 4), [Block(3, 2, 0, 1)])


def test_partition_from_labels():
    p = Partition.from_labels(["x", "y", "x", "z"])
    assert p.labels.tolist() == [0, 1, 0, 2] and p.k == 3
