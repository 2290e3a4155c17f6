"""Document-clustering benchmark: corpus loading, matrix recipes, train, k-means, score."""

from __future__ import annotations

import logging
import os
import tarfile
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .builders import bow_matrix, build_vocab, tfidf_transform, tokenize, word_context
from .core import EntityRegistry, MatrixSet
from .evaluation import acc, ari, kmeans, nmi
from .trainer import TrainConfig, train

log = logging.getLogger(__name__)

ENV_VAR = "RELEMBED_20NEWS"
FOUR_GROUPS = ("comp.graphics", "rec.sport.baseball", "sci.space", "talk.politics.mideast")


class DatasetUnavailable(FileNotFoundError):
    pass


@dataclass
class Corpus:
    texts: list[str]
    labels: list[str]

    def subset(self, groups: Sequence[str]) -> "Corpus":
        keep = [i for i, g in enumerate(self.labels) if g in set(groups)]
        return Corpus([self.texts[i] for i in keep], [self.labels[i] for i in keep])


def _read_tree(root: Path) -> Corpus:
    texts, labels = [], []
    for group in sorted(p for p in root.iterdir() if p.is_dir()):
        for f in sorted(group.iterdir(), key=lambda p: p.name):
            texts.append(f.read_text(encoding="latin-1"))
            labels.append(group.name)
    return Corpus(texts, labels)


def _read_tar(path: Path) -> Corpus:
    texts, labels = [], []
    with tarfile.open(path) as tar:
        members = sorted((m for m in tar.getmembers() if m.isfile()), key=lambda m: m.name)
        for m in members:
            parts = Path(m.name).parts
            if len(parts) < 2:
                continue
            texts.append(tar.extractfile(m).read().decode("latin-1"))
            labels.append(parts[-2])
    return Corpus(texts, labels)


def load_newsgroups(path: str | os.PathLike | None = None) -> Corpus:
    """20 Newsgroups from a local copy.

    Looks at ``path``, then ``$RELEMBED_20NEWS`` (a ``20news-18828``
    directory or tarball), then scikit-learn's cache. Never downloads.
    """
    path = path or os.environ.get(ENV_VAR)
    if path:
        p = Path(path)
        if p.is_dir():
            # accept either the group directories or their parent
            kids = [k for k in p.iterdir() if k.is_dir()]
            if len(kids) == 1 and not any(k.is_dir() for k in p.iterdir() if k != kids[0]):
                p = kids[0]
            return _read_tree(p)
        if p.is_file():
            return _read_tar(p)
        raise DatasetUnavailable(f"{p} does not exist")
    try:
        from sklearn.datasets import fetch_20newsgroups

        data = fetch_20newsgroups(subset="all", remove=("headers",), download_if_missing=False)
    except (OSError, IOError) as exc:
        raise DatasetUnavailable(
            f"20 Newsgroups not found; set {ENV_VAR} to a 20news-18828 directory or tarball"
        ) from exc
    names = data.target_names
    return Corpus(list(data.data), [names[t] for t in data.target])


def topic_corpus(
    n_topics: int = 4,
    docs_per_topic: int = 150,
    vocab_per_topic: int = 60,
    n_common: int = 200,
    doc_len: tuple[int, int] = (40, 120),
    topic_share: float = 0.35,
    seed: int = 0,
) -> Corpus:
    """Synthetic corpus: each document mixes its topic's words with a shared Zipfian background."""
    rng = np.random.default_rng(seed)
    common = [f"c{i}" for i in range(n_common)]
    zipf = 1.0 / np.arange(1, n_common + 1)
    zipf /= zipf.sum()
    texts, labels = [], []
    for t in range(n_topics):
        words = [f"t{t}w{i}" for i in range(vocab_per_topic)]
        tz = 1.0 / np.arange(1, vocab_per_topic + 1) ** 0.8
        tz /= tz.sum()
        for _ in range(docs_per_topic):
            n = int(rng.integers(doc_len[0], doc_len[1] + 1))
            is_topic = rng.random(n) < topic_share
            toks = np.where(
                is_topic,
                np.array(words)[rng.choice(vocab_per_topic, n, p=tz)],
                np.array(common)[rng.choice(n_common, n, p=zipf)],
            )
            texts.append(" ".join(toks.tolist()))
            labels.append(f"topic{t}")
    order = rng.permutation(len(texts))
    return Corpus([texts[i] for i in order], [labels[i] for i in order])


# defaults for the document benchmark; TrainConfig's own defaults suit small inputs
BENCH_CONFIG = TrainConfig(
    dim=100, n_iter=200_000, batch_size=128, n_neg=5, eta=0.025, lr_schedule="linear", seed=0
)
BENCH_VOCAB = 20_000
BENCH_WINDOW = 5


def default_config(n_docs: int, seed: int = 0) -> TrainConfig:
    """Benchmark config with about ten outer iterations per document."""
    n_iter = max(10_000, round(10 * n_docs, -3))
    return replace(BENCH_CONFIG, n_iter=n_iter, seed=seed)


def build_matrices(
    corpus: Corpus,
    recipe: str = "tfidf",
    with_wc: bool = False,
    vocab_size: int | None = BENCH_VOCAB,
    window: int = BENCH_WINDOW,
) -> MatrixSet:
    """``recipe`` is ``bow`` or ``tfidf``; ``with_wc`` adds the word x context-word matrix."""
    if recipe not in ("bow", "tfidf"):
        raise ValueError(f"unknown recipe {recipe!r}")
    docs = [tokenize(t) for t in corpus.texts]
    vocab = build_vocab(docs, vocab_size)
    reg = EntityRegistry()
    m = bow_matrix(reg, docs, vocab=vocab, doc_names=[f"d{i}" for i in range(len(docs))])
    if recipe == "tfidf":
        m = tfidf_transform(m, reg)
    ms = MatrixSet(reg, [m])
    if with_wc:
        ms.add(word_context(reg, docs, window, vocab_size))
    return ms


def score(pred, truth) -> dict[str, float]:
    return {"nmi": nmi(pred, truth), "ari": ari(pred, truth), "acc": acc(pred, truth)}


def raw_bow_baseline(corpus: Corpus, vocab_size: int | None = BENCH_VOCAB, seed: int = 0, n_init: int = 10) -> dict:
    """k-means directly on the document x word count rows."""
    ms = build_matrices(corpus, "bow", vocab_size=vocab_size)
    x = ms.matrices[0].to_scipy()
    k = len(set(corpus.labels))
    part = kmeans(x, k, n_init=n_init, seed=seed).partition
    return score(part, _doc_labels(ms, corpus))


def _doc_labels(ms: MatrixSet, corpus: Corpus) -> list[str]:
    names = ms.registry.names("doc")
    return [corpus.labels[int(n[1:])] for n in names]


def run_pipeline(
    corpus: Corpus,
    recipe: str = "tfidf",
    with_wc: bool = False,
    config: TrainConfig | None = None,
    vocab_size: int | None = BENCH_VOCAB,
    window: int = BENCH_WINDOW,
    n_init: int = 10,
) -> dict[str, float]:
    """Build matrices, train, cluster document embeddings with k = #labels, score."""
    ms = build_matrices(corpus, recipe, with_wc, vocab_size, window)
    config = config or default_config(len(corpus.texts))
    emb = train(ms, config)
    k = len(set(corpus.labels))
    part = kmeans(emb.of_type("doc"), k, n_init=n_init, seed=config.seed).partition
    out = score(part, _doc_labels(ms, corpus))
    log.info("%s%s: %s", recipe, "+wc" if with_wc else "", out)
    return out


def with_seed(config: TrainConfig, seed: int) -> TrainConfig:
    return replace(config, seed=seed)
