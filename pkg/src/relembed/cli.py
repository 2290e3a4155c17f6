"""Command-line entry point: ``relembed {build,train,eval,export,synth}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import builders
from .core import EntityRegistry, MatrixSet, NumericError, RelmatError, read_matrix, read_vocab, write_matrix
from .evaluation import Partition, kmeans, sampling_task, visualization_task
from .io import read_embeddings, split_key, write_embeddings
from .postproc import center_by_type, nearest_neighbors, pairwise_distances, write_distances, write_neighbors
from .textbench import score
from .trainer import TrainConfig, train

log = logging.getLogger("relembed")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---- run configuration ------------------------------------------------------

_INT_KEYS = {"n_iter", "n_neg", "dim", "batch_size", "seed", "workers", "probe_size", "checkpoint_every"}
_FLOAT_KEYS = {"eta", "neg_power"}
_BOOL_KEYS = {"exclude_positive"}
_STR_KEYS = {"sampling", "lr_schedule", "dtype"}


@dataclass
class RunConfig:
    matrices: list[Path] = field(default_factory=list)
    alphas: list[float] | None = None
    vocab: Path | None = None
    output: Path = Path("embeddings.txt")
    train: dict = field(default_factory=dict)

    def train_config(self) -> TrainConfig:
        try:
            return TrainConfig(**self.train, alphas=self.alphas)
        except RelmatError as exc:
            raise UsageError(str(exc)) from None

    def validate(self) -> None:
        if not self.matrices:
            raise UsageError("no matrices given")
        for p in [*self.matrices, *([self.vocab] if self.vocab else [])]:
            if not p.is_file():
                raise UsageError(f"file not found: {p}")
        if self.alphas is not None and len(self.alphas) != len(self.matrices):
            raise UsageError(f"{len(self.alphas)} alphas for {len(self.matrices)} matrices")
        self.train_config()

    def dumps(self) -> str:
        lines = ["# effective configuration; rerun with: relembed train --config <this file>"]
        lines.append("matrices = " + ", ".join(str(p.resolve()) for p in self.matrices))
        if self.alphas is not None:
            lines.append("alphas = " + ", ".join(repr(a) for a in self.alphas))
        if self.vocab:
            lines.append(f"vocab = {self.vocab.resolve()}")
        lines.append(f"output = {self.output.resolve()}")
        cfg = self.train_config().as_dict()
        for k in sorted(cfg):
            if k in ("alphas", "checkpoint_path"):
                continue
            lines.append(f"{k} = {cfg[k]}")
        return "\n".join(lines) + "\n"


def _coerce(key: str, value: str):
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _BOOL_KEYS:
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return value.lower() in ("true", "1", "yes")
    except ValueError:
        raise UsageError(f"bad value for {key}: {value!r}") from None
    if key in _STR_KEYS:
        return value
    raise UsageError(f"unknown config key {key!r}")


def apply_setting(cfg: RunConfig, key: str, value: str, base: Path) -> None:
    key = key.strip()
    value = value.strip()
    if key == "matrices":
        cfg.matrices = [base / v.strip() for v in value.split(",") if v.strip()]
    elif key == "matrix":
        cfg.matrices.append(base / value)
    elif key == "alphas":
        try:
            cfg.alphas = [float(v) for v in value.split(",")]
        except ValueError:
            raise UsageError(f"bad alphas: {value!r}") from None
    elif key == "vocab":
        cfg.vocab = base / value
    elif key == "output":
        cfg.output = base / value
    else:
        cfg.train[key] = _coerce(key, value)


def parse_config(path: Path, cfg: RunConfig | None = None) -> RunConfig:
    cfg = cfg or RunConfig()
    base = path.resolve().parent
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            k, v = line.split("=", 1)
            apply_setting(cfg, k, v, base)
    return cfg


# ---- commands -----------------------------------------------------------------


def _need(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise UsageError(f"recipe {args.recipe!r} requires --{n.replace('_', '-')}")


def _table(args):
    src = builders.read_table(args.input, delimiter=args.delimiter)
    try:
        src.require(*[a for a in (args.row, args.col, args.via) if a is not None])
    except RelmatError as exc:
        raise UsageError(str(exc)) from None
    return src


def cmd_build(args) -> int:
    reg = EntityRegistry()
    r = args.recipe
    if r == "cooccur":
        _need(args, "row", "col")
        m = builders.cooccurrence(reg, _table(args), args.row, args.col)
    elif r == "coattend":
        _need(args, "row", "via")
        m = builders.coattendance(reg, _table(args), args.row, args.via)
    elif r == "tfidf":
        m = builders.tfidf_transform(read_matrix(args.input, reg), reg)
    elif r == "similarity":
        _need(args, "row")
        src = _table(args)
        cols = args.features.split(",") if args.features else [a for a in src.attributes if a != args.row]
        try:
            src.require(*cols)
        except RelmatError as exc:
            raise UsageError(str(exc)) from None
        names, feats = [], []
        for i, rec in enumerate(src.rows):
            if rec.get(args.row) is None:
                continue
            try:
                feats.append([float(rec[c]) if rec[c] is not None else 0.0 for c in cols])
            except ValueError:
                raise RelmatError(f"{args.input}: row {i + 2} has a non-numeric feature") from None
            names.append(rec[args.row])
        m = builders.similarity_matrix(reg, args.type or args.row, (names, np.array(feats)),
                                       args.threshold, args.top_k or None)
    elif r in ("wordcontext", "bow"):
        names, docs = _read_docs(args.input)
        if r == "wordcontext":
            m = builders.word_context(reg, docs, args.window, args.vocab_size)
        else:
            m = builders.bow_matrix(reg, docs, args.vocab_size, doc_names=names)
    else:  # argparse choices guard this
        raise UsageError(f"unknown recipe {r!r}")
    if args.alpha is not None:
        m = m.with_alpha(args.alpha)
    write_matrix(m, reg, args.output)
    print(f"cells={m.nnz} mass={m.total_mass!r} rows={m.row_type} cols={m.col_type}")
    return 0


def _read_docs(path):
    names, docs = [], []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.rstrip("\n")
            name, sep, text = line.partition("\t")
            if not sep:
                name, text = f"d{i}", line
            names.append(name)
            docs.append(builders.tokenize(text))
    if not docs:
        raise RelmatError(f"{path}: empty corpus")
    return names, docs


def cmd_train(args) -> int:
    cfg = parse_config(Path(args.config)) if args.config else RunConfig()
    if args.matrix:
        cfg.matrices = [Path(p) for p in args.matrix]
    for kv in args.set or []:
        if "=" not in kv:
            raise UsageError(f"--set expects key=value, got {kv!r}")
        k, v = kv.split("=", 1)
        apply_setting(cfg, k, v, Path.cwd())
    for key in ("sampling", "seed", "n_iter", "dim", "eta", "n_neg", "batch_size", "workers", "lr_schedule"):
        val = getattr(args, key)
        if val is not None:
            cfg.train[key] = val
    if args.alphas:
        apply_setting(cfg, "alphas", args.alphas, Path.cwd())
    if args.output:
        cfg.output = Path(args.output)
    cfg.validate()

    reg = read_vocab(cfg.vocab) if cfg.vocab else EntityRegistry()
    ms = MatrixSet(reg, [read_matrix(p, reg) for p in cfg.matrices])
    tc = cfg.train_config()
    if tc.checkpoint_every and not tc.checkpoint_path:
        tc.checkpoint_path = str(cfg.output.with_suffix(".ckpt.txt"))
    emb = train(ms, tc)
    cfg.output.parent.mkdir(parents=True, exist_ok=True)
    write_embeddings(emb, cfg.output)
    cfg.output.with_suffix(".cfg").write_text(cfg.dumps(), encoding="utf-8")
    hist = " ".join(f"{it}:{v:.4f}" for it, v in emb.loss_history)
    print(f"entities={len(reg)} dim={emb.dim} probe_loss={hist}")
    return 0


def read_labels(path) -> dict[tuple[str, str], str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            key, sep, label = line.partition("\t")
            if not sep:
                raise RelmatError(f"{path}:{lineno}: expected 'type:name<TAB>label'")
            out[split_key(key)] = label
    return out


def cmd_eval(args) -> int:
    emb = read_embeddings(args.embeddings)
    labels = read_labels(args.labels)
    missing = [k for k in labels if not emb.registry.has_entity(*k)]
    if missing:
        shown = ", ".join(f"{t}:{n}" for t, n in missing[:10])
        raise RelmatError(f"{len(missing)} labelled entities absent from embeddings: {shown}")
    keys = list(labels)
    if args.type:
        keys = [k for k in keys if k[0] == args.type]
    if not keys:
        raise RelmatError("no labelled entities to evaluate")
    x = np.stack([emb.vector(t, n) for t, n in keys])
    truth = [labels[k] for k in keys]
    k = args.k or len(set(truth))
    part = kmeans(x, k, n_init=args.n_init, seed=args.seed).partition
    res = score(part, Partition.from_labels(truth))
    print(" ".join(f"{m}={round(v, 6)}" for m, v in res.items()))
    return 0


def cmd_export(args) -> int:
    emb = read_embeddings(args.embeddings)
    types = emb.types
    if args.drop_context:
        types = [t for t in types if emb.registry.get_type(t).role != "context"]
    if args.center:
        emb = center_by_type(emb, types)
    if args.dist:
        tl = args.dist.split(",")
        for t in tl:
            if t not in emb.offsets:
                raise UsageError(f"unknown entity type {t!r}")
        d, _ = pairwise_distances(emb, tl)
        write_distances(d, tl, args.out)
        print(f"distances {d.shape[0]}x{d.shape[1]} -> {args.out}")
    elif args.neighbors:
        if args.neighbors not in emb.offsets:
            raise UsageError(f"unknown entity type {args.neighbors!r}")
        if not args.query:
            raise UsageError("--neighbors needs at least one --query type:name")
        res = {}
        for q in args.query:
            t, n = split_key(q)
            if t not in emb.offsets:
                raise UsageError(f"unknown entity type {t!r}")
            res[q] = nearest_neighbors(emb, (t, n), args.neighbors, args.k)
        write_neighbors(res, args.neighbors, args.out)
        print(f"neighbors for {len(res)} queries -> {args.out}")
    else:
        write_embeddings(emb, args.out, types)
        print(f"embeddings ({'centered' if args.center else 'raw'}) -> {args.out}")
    return 0


SYNTH_TRAIN = {"dim": 16, "n_iter": 30, "eta": 0.025, "batch_size": 128, "n_neg": 5, "seed": 0}


def cmd_synth(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reg = EntityRegistry()
    if args.task == "two-matrix":
        m_ab, m_ac, labels = sampling_task(reg)
        mats = [m_ab, m_ac]
        label_sets = {"labels_four": labels["four"], "labels_ab": labels["ab"], "labels_ac": labels["ac"]}
        train_keys = dict(SYNTH_TRAIN)
    else:
        m, rl, cl = visualization_task(reg)
        mats = [m]
        label_sets = {"labels_A": rl, "labels_B": cl}
        train_keys = dict(SYNTH_TRAIN, n_iter=200)
    files = []
    for m in mats:
        p = out / f"{m.name}.tsv"
        write_matrix(m, reg, p)
        files.append(p.name)
    for fname, labs in label_sets.items():
        t = "B" if fname == "labels_B" else "A"
        with open(out / f"{fname}.tsv", "w", encoding="utf-8") as fh:
            for name, lab in zip(reg.names(t), labs):
                fh.write(f"{t}:{name}\t{lab}\n")
    with open(out / "train.cfg", "w", encoding="utf-8") as fh:
        fh.write(f"matrices = {', '.join(files)}\n")
        for k, v in train_keys.items():
            fh.write(f"{k} = {v}\n")
        fh.write("output = embeddings.txt\n")
    print(f"wrote {len(mats)} matrices, {len(label_sets)} label files and train.cfg to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("-q", "--quiet", action="store_true", default=argparse.SUPPRESS, help="only log warnings")
    p = _Parser(prog="relembed", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build", parents=[common], help="build a relation matrix file")
    b.add_argument("recipe", choices=["cooccur", "tfidf", "coattend", "similarity", "wordcontext", "bow"])
    b.add_argument("input")
    b.add_argument("-o", "--output", required=True)
    b.add_argument("--row", help="row attribute (entity column for similarity)")
    b.add_argument("--col", help="column attribute")
    b.add_argument("--via", help="attribute whose shared values define co-attendance")
    b.add_argument("--type", help="entity type name for the similarity recipe")
    b.add_argument("--features", help="comma-separated numeric columns for similarity")
    b.add_argument("--threshold", type=float, default=0.0)
    b.add_argument("--top-k", type=int, default=100)
    b.add_argument("--window", type=int, default=5)
    b.add_argument("--vocab-size", type=int, default=None)
    b.add_argument("--delimiter", default="\t")
    b.add_argument("--alpha", type=float, default=None)
    b.set_defaults(func=cmd_build)

    t = sub.add_parser("train", parents=[common], help="learn embeddings from matrix files")
    t.add_argument("--config")
    t.add_argument("--matrix", action="append")
    t.add_argument("--alphas", help="comma-separated, one per matrix")
    t.add_argument("--output")
    t.add_argument("--sampling", choices=["independent", "global"])
    t.add_argument("--lr-schedule", choices=["constant", "linear"])
    t.add_argument("--seed", type=int)
    t.add_argument("--n-iter", type=int)
    t.add_argument("--dim", type=int)
    t.add_argument("--eta", type=float)
    t.add_argument("--n-neg", type=int)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--workers", type=int)
    t.add_argument("--set", action="append", metavar="KEY=VALUE")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", parents=[common], help="k-means on embeddings scored against labels")
    e.add_argument("embeddings")
    e.add_argument("labels")
    e.add_argument("--k", type=int)
    e.add_argument("--type")
    e.add_argument("--n-init", type=int, default=10)
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_eval)

    x = sub.add_parser("export", parents=[common], help="centered embeddings, distance matrices, neighbour lists")
    x.add_argument("embeddings")
    x.add_argument("--out", required=True)
    x.add_argument("--center", action="store_true")
    x.add_argument("--drop-context", action="store_true")
    x.add_argument("--dist", metavar="T1,T2,...")
    x.add_argument("--neighbors", metavar="TYPE")
    x.add_argument("--query", action="append", metavar="TYPE:NAME")
    x.add_argument("--k", type=int, default=50)
    x.set_defaults(func=cmd_export)

    s = sub.add_parser("synth", parents=[common], help="write the synthetic block-matrix tasks")
    s.add_argument("task", choices=["two-matrix", "four-block"])
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if getattr(args, "quiet", False) else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"relembed: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"relembed: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (RelmatError, OSError) as exc:
        print(f"relembed: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
