import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import TOY_ROWS
from relembed.builders import (
    TabularSource,
    bow_matrix,
    build_vocab,
    coattendance,
    cooccurrence,
    read_table,
    similarity_matrix,
    tfidf_transform,
    tokenize,
    word_context,
)
from relembed.core import EntityRegistry, RelmatError, build_matrix


def _named(m, reg):
    return {(reg.name_of(m.row_type, r), reg.name_of(m.col_type, c)): w for r, c, w in m.triplets}


def test_tokenize():
    assert tokenize("Hello, World! it's x_y 42") == ["hello", "world", "it", "s", "x", "y", "42"]


def test_vocab_by_frequency_ties_first_seen():
    docs = [["b", "a", "c"], ["a", "c", "d"]]
    assert build_vocab(docs, None) == ["a", "c", "b", "d"]
    assert build_vocab(docs, 2) == ["a", "c"]


def test_toy_cooccurrence(toy_table):
    reg = EntityRegistry()
    m = cooccurrence(reg, read_table(toy_table), "A", "B")
    brute = Counter((a, b) for a, b, _ in TOY_ROWS)
    assert _named(m, reg) == {k: float(v) for k, v in brute.items()}
    assert m.nnz == 4 and m.total_mass == 6.0
    assert _named(m, reg) == {("A1", "B1"): 2.0, ("A1", "B2"): 1.0, ("A2", "B1"): 1.0, ("A2", "B2"): 2.0}


def test_cooccurrence_skips_missing_and_checks_attributes(tmp_path):
    p = tmp_path / "t.tsv"
    p.write_text("x\ty\nu\t\nu\tv\n\tv\n")
    reg = EntityRegistry()
    m = cooccurrence(reg, read_table(p), "x", "y")
    assert _named(m, reg) == {("u", "v"): 1.0}
    with pytest.raises(RelmatError):
        cooccurrence(reg, read_table(p), "x", "z")
    with pytest.raises(RelmatError):
        cooccurrence(reg, read_table(p), "x", "x")


def test_read_table_reports_ragged_line(tmp_path):
    p = tmp_path / "t.tsv"
    p.write_text("a\tb\n1\t2\n3\n")
    with pytest.raises(RelmatError, match=":3:"):
        read_table(p)


def _tfidf_oracle(dense):
    n_docs = dense.shape[0]
    out = np.zeros_like(dense)
    for j in range(dense.shape[1]):
        df = sum(1 for i in range(n_docs) if dense[i, j] > 0)
        if df:
            for i in range(n_docs):
                out[i, j] = dense[i, j] * math.log(n_docs / df)
    return out


def test_toy_tfidf_is_all_zero(toy_table):
    reg = EntityRegistry()
    m = cooccurrence(reg, read_table(toy_table), "A", "B")
    assert not _tfidf_oracle(m.to_dense()).any()
    with pytest.raises(RelmatError, match="every row"):
        tfidf_transform(m, reg)


@given(st.integers(0, 2**32 - 1))
def test_tfidf_matches_oracle(seed):
    r = np.random.default_rng(seed)
    dense = np.floor(r.random((6, 8)) * 4) * (r.random((6, 8)) < 0.5)
    dense[0, 0] = 1.0
    dense[1:, 0] = 0.0  # guarantees one informative column
    reg = EntityRegistry()
    reg.add_type("doc")
    reg.add_type("word")
    reg.register_many("doc", [str(i) for i in range(6)])
    reg.register_many("word", [str(i) for i in range(8)])
    rr, cc = np.nonzero(dense)
    m = build_matrix(reg, "doc", "word", (rr, cc, dense[rr, cc]))
    np.testing.assert_allclose(tfidf_transform(m, reg).to_dense(), _tfidf_oracle(dense), rtol=1e-14)


def test_toy_coattendance(toy_table):
    reg = EntityRegistry()
    m = coattendance(reg, read_table(toy_table), "A", "C")
    assert m.col_type == "A-ctx"
    assert _named(m, reg) == {("A1", "A2"): 2.0, ("A2", "A1"): 2.0}


tables = st.lists(st.tuples(st.sampled_from("pqrst"), st.sampled_from("uvwxyz")), min_size=2, max_size=30)


@given(tables)
def test_coattendance_is_set_intersection(pairs):
    src = TabularSource([{"a": a, "v": v} for a, v in pairs])
    sets = {}
    for a, v in pairs:
        sets.setdefault(a, set()).add(v)
    expect = {(x, y): float(len(sets[x] & sets[y])) for x in sets for y in sets
              if x != y and sets[x] & sets[y]}
    reg = EntityRegistry()
    if not expect:
        with pytest.raises(RelmatError):
            coattendance(reg, src, "a", "v")
        return
    m = coattendance(reg, src, "a", "v")
    assert _named(m, reg) == expect
    dense = m.to_dense()
    assert np.array_equal(dense, dense.T) and not np.diag(dense).any()


def test_similarity_matches_cosine(rng):
    names = [f"e{i}" for i in range(12)]
    x = rng.normal(size=(12, 5))
    reg = EntityRegistry()
    m = similarity_matrix(reg, "D", (names, x), threshold=0.2, top_k=None)
    assert m.col_type == "D-ctx"
    got = m.to_dense()
    for i in range(12):
        for j in range(12):
            cos = x[i] @ x[j] / (np.linalg.norm(x[i]) * np.linalg.norm(x[j]))
            want = cos if (i != j and cos > 0.2) else 0.0
            assert got[i, j] == pytest.approx(want, abs=1e-12)


def test_similarity_top_k(rng):
    x = rng.normal(size=(10, 3))
    reg = EntityRegistry()
    m = similarity_matrix(reg, "D", {f"e{i}": v for i, v in enumerate(x)}, top_k=2)
    assert np.bincount(m.rows, minlength=10).max() <= 2


def test_similarity_all_zero_features():
    with pytest.raises(RelmatError):
        similarity_matrix(EntityRegistry(), "D", {"a": [0.0], "b": [0.0]})


def _wc_oracle(docs, window, vocab):
    out = Counter()
    for d in docs:
        for i, w in enumerate(d):
            for j in range(max(0, i - window), min(len(d), i + window + 1)):
                if j != i and w in vocab and d[j] in vocab:
                    out[(w, d[j])] += 1
    return {k: float(v) for k, v in out.items()}


@given(st.lists(st.lists(st.sampled_from("abcdefg"), max_size=15), min_size=1, max_size=6),
       st.integers(1, 4), st.one_of(st.none(), st.integers(1, 5)))
def test_word_context_matches_window_count(docs, window, vocab_size):
    vocab = set(build_vocab(docs, vocab_size))
    expect = _wc_oracle(docs, window, vocab)
    reg = EntityRegistry()
    if not expect:
        with pytest.raises(RelmatError):
            word_context(reg, docs, window, vocab_size)
        return
    m = word_context(reg, docs, window, vocab_size)
    assert m.col_type == "word-ctx"
    assert _named(m, reg) == expect


def test_word_context_windows_span_oov():
    reg = EntityRegistry()
    m = word_context(reg, [["a", "zz", "a", "b", "a", "b"]], 2, vocab_size=2)
    got = _named(m, reg)
    # positions 0-2 and 2-4 are in range despite the dropped "zz", counted both ways
    assert got[("a", "a")] == 4.0
    assert got[("a", "b")] == got[("b", "a")] == 3.0
    assert ("a", "zz") not in got


def test_bow_counts():
    reg = EntityRegistry()
    m = bow_matrix(reg, ["the cat the hat", "a cat"], doc_names=["x", "y"])
    assert _named(m, reg) == {("x", "the"): 2.0, ("x", "cat"): 1.0, ("x", "hat"): 1.0,
                              ("y", "a"): 1.0, ("y", "cat"): 1.0}
    with pytest.raises(RelmatError):
        bow_matrix(EntityRegistry(), ["a"], doc_names=["x", "y"])
