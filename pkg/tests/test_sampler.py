import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from relembed.core import EntityRegistry, MatrixSet, RelmatError, build_matrix
from relembed.sampler import (
    alias_from_weights,
    build_alias_table,
    build_global_table,
    sample_negatives,
    sample_pair,
    sample_pairs,
    unigram_table,
)
from relembed.trainer import EmbeddingSet, TrainConfig, _Plan


def _matrix(reg, weights_dense, rt="A", ct="B"):
    for t, n in ((rt, weights_dense.shape[0]), (ct, weights_dense.shape[1])):
        reg.ensure_type(t)
        reg.register_many(t, [f"{t}{i}" for i in range(n)])
    r, c = np.nonzero(weights_dense)
    return build_matrix(reg, rt, ct, (r, c, weights_dense[r, c]))


weights = arrays(np.float64, st.integers(1, 60),
                 elements=st.floats(min_value=0.0, max_value=1e6, allow_nan=False)).filter(lambda w: w.sum() > 0)


@given(weights)
def test_table_reconstructs_exact_probabilities(w):
    t = alias_from_weights(w)
    np.testing.assert_allclose(t.probabilities(), w / w.sum(), atol=1e-12)
    assert np.all((t.prob >= 0) & (t.prob <= 1 + 1e-12))


def test_zero_weight_cells_never_drawn(rng):
    t = alias_from_weights(np.array([0.0, 1.0, 0.0, 3.0]))
    k = t.draw(rng, 10_000)
    assert set(np.unique(k)) <= {1, 3}


def test_uniform_weights_all_prob_one():
    t = alias_from_weights(np.ones(7))
    assert np.all(t.prob == 1.0)


@pytest.mark.parametrize("w", [np.array([]), np.array([0.0, 0.0]), np.array([1.0, -1.0]), np.array([np.nan])])
def test_rejects_degenerate_weights(w):
    with pytest.raises(RelmatError):
        alias_from_weights(w)


def test_empirical_frequencies_match(rng):
    reg = EntityRegistry()
    dense = rng.random((30, 30)) * (rng.random((30, 30)) < 0.3)
    m = _matrix(reg, dense)
    table = build_alias_table(m)
    n = 200_000
    k = table.draw(rng, n)
    counts = np.bincount(k, minlength=m.nnz)
    p = m.weights / m.total_mass
    assert stats.chisquare(counts, p * n).pvalue > 0.001


def test_sample_pair_returns_nonzero_cells(rng):
    reg = EntityRegistry()
    dense = np.zeros((4, 4))
    dense[1, 2] = 1.0
    dense[3, 0] = 2.0
    table = build_alias_table(_matrix(reg, dense))
    for _ in range(50):
        assert sample_pair(table, rng) in {(1, 2), (3, 0)}
    r, c = sample_pairs(table, rng, 100)
    assert set(zip(r.tolist(), c.tolist())) <= {(1, 2), (3, 0)}


def test_negatives_uniform_over_column_type(rng):
    reg = EntityRegistry()
    reg.add_type("B")
    reg.register_many("B", [f"b{i}" for i in range(8)])
    draws = np.concatenate([sample_negatives(reg, "B", 5, rng) for _ in range(4000)])
    counts = np.bincount(draws, minlength=8)
    assert stats.chisquare(counts).pvalue > 0.001


def test_global_table_weights_by_mass():
    reg = EntityRegistry()
    m1 = _matrix(reg, np.array([[1.0, 1.0]]), "A", "B")
    m2 = _matrix(reg, np.array([[100.0]]), "A", "C")
    g = build_global_table(MatrixSet(reg, [m1, m2]))
    np.testing.assert_allclose(g.table.probabilities(), [1 / 102, 1 / 102, 100 / 102])
    assert g.matrix_index.tolist() == [0, 0, 1]


def test_unigram_table_uses_smoothed_marginals():
    reg = EntityRegistry()
    m = _matrix(reg, np.array([[1.0, 0.0, 4.0], [0.0, 0.0, 4.0]]))
    t = unigram_table(m, 3, 0.75)
    marg = np.array([1.0, 0.0, 8.0]) ** 0.75
    np.testing.assert_allclose(t.probabilities(), marg / marg.sum())


def _plan(reg, mats, **kw):
    offsets, _ = EmbeddingSet.layout(reg)
    return _Plan(MatrixSet(reg, mats), offsets, TrainConfig(dim=2, **kw))


def test_independent_plan_gives_each_matrix_one_batch_per_iteration(rng):
    reg = EntityRegistry()
    small = _matrix(reg, np.full((3, 3), 0.1), "A", "B")
    big = _matrix(reg, np.full((3, 2), 1000.0), "A", "C")
    plan = _plan(reg, [small, big], batch_size=4)
    p, q, negs, alpha = plan.draw(rng, 10)
    b_off, c_off = 3, 6
    col_kind = np.where(q >= c_off, 1, 0)
    # iteration-major, then matrix, then batch
    assert col_kind.reshape(10, 2, 4)[:, 0].max() == 0
    assert col_kind.reshape(10, 2, 4)[:, 1].min() == 1
    assert negs.shape == (80, 5)
    neg_b = negs.reshape(10, 2, 4, 5)
    assert np.all((neg_b[:, 0] >= b_off) & (neg_b[:, 0] < c_off))
    assert np.all(neg_b[:, 1] >= c_off)


def test_global_plan_follows_mass(rng):
    reg = EntityRegistry()
    small = _matrix(reg, np.full((3, 3), 0.1), "A", "B")
    big = _matrix(reg, np.full((3, 3), 1.0), "A", "C")
    plan = _plan(reg, [small, big], batch_size=100, sampling="global")
    _, q, _, _ = plan.draw(rng, 100)
    share_small = np.mean(q < 6)
    assert abs(share_small - 0.9 / 9.9) < 0.01


def test_exclude_positive(rng):
    reg = EntityRegistry()
    m = _matrix(reg, np.eye(3))
    plan = _plan(reg, [m], batch_size=50, exclude_positive=True, n_neg=10)
    _, q, negs, _ = plan.draw(rng, 20)
    assert not np.any(negs == q[:, None])
