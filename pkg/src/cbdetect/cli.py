"""Command-line entry point.

One binary with subcommands covering the whole study: ``ingest`` converts
raw platform exports to the canonical corpus format, ``stats`` prints the
swearing/anonymity probability row, ``baseline`` cross-validates the
traditional models, ``train``/``evaluate`` handle the neural models,
``transfer`` runs TL1/TL2/TL3, ``neighbors``/``tsne`` query learned
embeddings, and ``report`` re-renders stored result tables.

Exit codes: 0 success, 1 usage error, 2 data error. Every subcommand
accepts --dry-run to print the resolved plan without side effects, and
every run writes a manifest (config, seeds, input checksums) sufficient
to reproduce it bit-identically.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import baselines, corpus, embedspace, evaluation, lexstats, nnmodels, transfer
from .serialize import ModelFileError


class UsageError(Exception):
    pass


class ConfigError(ValueError):
    pass


DATA_ERRORS = (corpus.CorpusError, lexstats.LexiconError,
               embedspace.EmbeddingError, ModelFileError, ConfigError,
               transfer.TransferError, FileNotFoundError,
               nnmodels.TrainingDivergedError)


# ---------------------------------------------------------------------------
# experiment configuration
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    dataset: str = "Formspring"
    corpus: str = ""
    lexicon: str = ""
    stopwords: str = ""
    architecture: str = "BLSTM_ATTN"
    embed_dim: int = 50
    hidden: int = 50
    dropout_pre: float = 0.25
    dropout_post: float = 0.5
    epochs: int = 10
    batch: int = 128
    lr: float = 1e-3
    seed: int = 0
    embed_init: str = "random"
    embed_path: str = ""
    oversample_rate: int = 3
    folds: int = 5
    jobs: int = 1
    output_dir: str = "runs/out"
    kind: str = "LR"
    representation: str = "word"
    n_min: int = 2
    n_max: int = 4
    min_count: int = 1
    subsample: int = 0
    max_len: int = 0  # 0 = use the corpus 95th-percentile length
    dtype: str = "float64"

    def validate(self):
        for name in ("dropout_pre", "dropout_post"):
            rate = getattr(self, name)
            if not 0.0 <= rate < 1.0:
                raise ConfigError(f"{name} = {rate} outside [0, 1)")
        if self.dataset not in corpus.PLATFORMS:
            raise ConfigError(
                f"dataset {self.dataset!r} not one of {corpus.PLATFORMS}")
        if self.architecture not in nnmodels.ARCHITECTURES:
            raise ConfigError(
                f"architecture {self.architecture!r} not one of "
                f"{nnmodels.ARCHITECTURES}")
        if self.embed_init not in nnmodels.EMBED_INITS:
            raise ConfigError(f"embed_init {self.embed_init!r} invalid")
        if self.oversample_rate < 1:
            raise ConfigError("oversample_rate must be >= 1")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        for key in ("corpus", "lexicon", "stopwords", "embed_path"):
            value = getattr(self, key)
            if value and not Path(resolve_data_path(value)).exists():
                raise ConfigError(f"{key} file does not exist: {value}")
        return self


def parse_config(path) -> ExperimentConfig:
    """Line-oriented ``key = value`` file with '#' comments."""
    known = {f.name: f.type for f in fields(ExperimentConfig)}
    cfg = ExperimentConfig()
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        caster = {int: int, float: float, str: str,
                  "int": int, "float": float, "str": str}[known[key]]
        try:
            setattr(cfg, key, caster(value))
        except ValueError:
            raise ConfigError(
                f"{path}:{lineno}: cannot parse {value!r} as "
                f"{getattr(caster, '__name__', caster)}") from None
    return cfg.validate()


def resolve_data_path(path) -> str:
    """Relative paths fall back to $CB_DATA_DIR when not found locally."""
    p = Path(path)
    if p.exists() or p.is_absolute():
        return str(p)
    root = os.environ.get("CB_DATA_DIR", "")
    if root and (Path(root) / p).exists():
        return str(Path(root) / p)
    return str(p)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: Path, command: str, config: dict, inputs: dict,
                   outputs: list[str]):
    manifest = {
        "command": command,
        "config": config,
        "inputs": {name: sha256_file(p) for name, p in inputs.items()},
        "outputs": outputs,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_corpus_for(cfg: ExperimentConfig) -> corpus.LabeledCorpus:
    path = resolve_data_path(cfg.corpus)
    stopwords = (frozenset(corpus.read_wordlist(resolve_data_path(cfg.stopwords)))
                 if cfg.stopwords else None)
    loaded = corpus.load_dataset(cfg.dataset, path, stopwords=stopwords)
    if cfg.subsample and len(loaded) > cfg.subsample:
        loaded = corpus.subsample(loaded, cfg.subsample, seed=cfg.seed)
    limit = loaded.length_at_95 if loaded.posts else 0
    if limit >= 1:
        loaded = corpus.truncate(loaded, limit)
    return loaded


def detect_platform(path) -> str:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line:
                parts = line.split("\t")
                if len(parts) == 5 and parts[1] in corpus.PLATFORMS:
                    return parts[1]
                break
    raise corpus.CorpusError(f"{path}: not a canonical corpus file")


def neural_estimator(cfg: ExperimentConfig, architecture=None, embed_init=None,
                     max_len=None) -> nnmodels.NeuralTextClassifier:
    init = embed_init or cfg.embed_init
    if init in ("glove", "sswe") and not cfg.embed_path:
        raise ConfigError(
            f"embed_init = {init} requires an embed_path pointing at a "
            "pretrained vector file")
    return nnmodels.NeuralTextClassifier(
        architecture=architecture or cfg.architecture,
        embed_dim=cfg.embed_dim, hidden=cfg.hidden,
        dropout_pre=cfg.dropout_pre, dropout_post=cfg.dropout_post,
        epochs=cfg.epochs, batch=cfg.batch, lr=cfg.lr, seed=cfg.seed,
        embed_init=init,
        embed_path=resolve_data_path(cfg.embed_path) if cfg.embed_path else None,
        max_len=max_len or (cfg.max_len or None), min_count=cfg.min_count,
        dtype=cfg.dtype)


def _print(text=""):
    sys.stdout.write(str(text) + "\n")


def _dry_run_plan(args, plan: dict) -> int:
    _print("dry-run plan:")
    for key, value in plan.items():
        _print(f"  {key} = {value}")
    return 0


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    if args.dry_run:
        return _dry_run_plan(args, {
            "platform": args.platform, "input": args.input,
            "annotations": args.annotations, "output": args.output})
    n = corpus.ingest(args.platform, resolve_data_path(args.input),
                      args.output,
                      annotations_path=(resolve_data_path(args.annotations)
                                        if args.annotations else None))
    _print(f"wrote {n} canonical records to {args.output}")
    return 0


def cmd_stats(args) -> int:
    lexicon = (lexstats.load_lexicon(resolve_data_path(args.lexicon))
               if args.lexicon else lexstats.default_lexicon())
    if args.dry_run:
        return _dry_run_plan(args, {
            "corpora": args.corpus, "lexicon_size": len(lexicon)})
    _print(lexstats.stats_header())
    for path in args.corpus:
        path = resolve_data_path(path)
        platform = detect_platform(path)
        stopwords = (frozenset(corpus.read_wordlist(resolve_data_path(args.stopwords)))
                     if args.stopwords else None)
        loaded = corpus.load_dataset(platform, path, stopwords=stopwords)
        table = lexstats.conditional_stats(loaded, lexicon)
        _print(lexstats.render_stats_row(platform, table))
    return 0


def cmd_baseline(args) -> int:
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    _apply_overrides(cfg, args)
    cfg.validate()
    kinds = baselines.KINDS if args.kind == "all" else (args.kind,)
    reps = ("char", "word") if args.representation == "both" else (args.representation,)
    if args.dry_run:
        return _dry_run_plan(args, {
            "corpus": cfg.corpus, "kinds": kinds, "representations": reps,
            "folds": cfg.folds, "oversample_rate": args.oversample_rate,
            "seed": cfg.seed, "output_dir": cfg.output_dir})
    loaded = load_corpus_for(cfg)
    positives = sorted(corpus.minority_classes(loaded.label_space))
    headers = ["Representation", "Model"] + [
        f"{label}-{m}" for label in positives for m in ("P", "R", "F1")]
    rows = []
    for rep in reps:
        for kind in kinds:
            est = baselines.TextBaseline(kind=kind, representation=rep,
                                         n_min=cfg.n_min, n_max=cfg.n_max,
                                         seed=cfg.seed)
            report = evaluation.cross_validate(
                loaded, est, k=cfg.folds,
                oversample_rate=args.oversample_rate, seed=cfg.seed,
                jobs=cfg.jobs)
            row = [rep, kind]
            for label in positives:
                p, r, f1 = report.mean.for_class(label)
                row.extend([p, r, f1])
            rows.append(row)
            _print(f"{rep}/{kind}: " + "  ".join(
                f"{label} F1={report.mean.f1[label]:.3f}" for label in positives))
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table_path = out_dir / "table3.tsv"
    table_path.write_text(evaluation.render_tsv(headers, rows), encoding="utf-8")
    write_manifest(out_dir, "baseline", asdict(cfg),
                   {"corpus": resolve_data_path(cfg.corpus)},
                   [str(table_path)])
    _print(evaluation.render_aligned(headers, rows))
    return 0


def cmd_train(args) -> int:
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    _apply_overrides(cfg, args)
    cfg.validate()
    if args.dry_run:
        return _dry_run_plan(args, {
            "corpus": cfg.corpus, "architecture": cfg.architecture,
            "embed_init": cfg.embed_init, "oversample_rate": cfg.oversample_rate,
            "epochs": cfg.epochs, "seed": cfg.seed,
            "output_dir": cfg.output_dir})
    loaded = load_corpus_for(cfg)
    posts = corpus.oversample(
        list(loaded.posts), corpus.minority_classes(loaded.label_space),
        cfg.oversample_rate, seed=cfg.seed) if cfg.oversample_rate > 1 else list(loaded.posts)
    est = neural_estimator(cfg, max_len=loaded.length_at_95 or None)
    est.fit(posts)
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / "model.cbnn1"
    est.model_.save(model_path)
    write_manifest(out_dir, "train", asdict(cfg),
                   {"corpus": resolve_data_path(cfg.corpus)},
                   [str(model_path)])
    _print(f"trained {cfg.architecture} on {len(posts)} posts "
           f"({cfg.epochs} epochs); model written to {model_path}")
    _print("loss trace: " + " ".join(f"{v:.4f}" for v in est.model_.loss_trace))
    return 0


def cmd_evaluate(args) -> int:
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    _apply_overrides(cfg, args)
    cfg.validate()
    archs = (args.architectures.split(",") if args.architectures
             else [cfg.architecture])
    inits = (args.inits.split(",") if args.inits else [cfg.embed_init])
    if args.dry_run:
        return _dry_run_plan(args, {
            "corpus": cfg.corpus, "architectures": archs, "inits": inits,
            "folds": cfg.folds, "oversample_rate": cfg.oversample_rate,
            "seed": cfg.seed, "output_dir": cfg.output_dir})
    loaded = load_corpus_for(cfg)
    positives = sorted(corpus.minority_classes(loaded.label_space))
    headers = ["Architecture", "Init", "Label", "P", "R", "F1", "Accuracy"]
    rows = []
    for arch in archs:
        for init in inits:
            est = neural_estimator(cfg, architecture=arch, embed_init=init,
                                   max_len=loaded.length_at_95 or None)
            report = evaluation.cross_validate(
                loaded, est, k=cfg.folds, oversample_rate=cfg.oversample_rate,
                seed=cfg.seed, jobs=cfg.jobs)
            for label in positives:
                p, r, f1 = report.mean.for_class(label)
                rows.append([arch, init, label, p, r, f1, report.mean.accuracy])
                _print(f"{arch}/{init}/{label}: P={p:.3f} R={r:.3f} F1={f1:.3f}")
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table_path = out_dir / "metrics.tsv"
    table_path.write_text(evaluation.render_tsv(headers, rows), encoding="utf-8")
    write_manifest(out_dir, "evaluate", asdict(cfg),
                   {"corpus": resolve_data_path(cfg.corpus)},
                   [str(table_path)])
    _print(evaluation.render_aligned(headers, rows))
    return 0


def cmd_transfer(args) -> int:
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    _apply_overrides(cfg, args)
    if args.source_model:
        source = nnmodels.NeuralModel.load(resolve_data_path(args.source_model))
    else:
        raise ConfigError("transfer requires --source-model")
    cfg.validate()
    flavors = args.flavors.split(",")
    for flavor in flavors:
        if flavor not in transfer.FLAVORS:
            raise ConfigError(f"unknown transfer flavor {flavor!r}")
    if args.dry_run:
        return _dry_run_plan(args, {
            "source_model": args.source_model, "corpus": cfg.corpus,
            "flavors": flavors, "folds": cfg.folds, "seed": cfg.seed,
            "output_dir": cfg.output_dir})
    loaded = load_corpus_for(cfg)
    headers = ["Flavor", "P", "R", "F1", "Accuracy"]
    rows = []
    for flavor in flavors:
        if flavor == "TL1":
            m = transfer.tl1_evaluate(source, loaded)
            p, r, f1 = m.for_class("bully")
            acc = m.accuracy
        else:
            report = transfer.transfer_cross_validate(
                source, loaded, flavor, k=cfg.folds,
                oversample_rate=cfg.oversample_rate, seed=cfg.seed,
                jobs=cfg.jobs, epochs=cfg.epochs, batch=cfg.batch, lr=cfg.lr,
                max_len=loaded.length_at_95 or None, min_count=cfg.min_count)
            p, r, f1 = report.mean.for_class("bully")
            acc = report.mean.accuracy
        rows.append([flavor, p, r, f1, acc])
        _print(f"{flavor}: P={p:.3f} R={r:.3f} F1={f1:.3f} acc={acc:.3f}")
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table_path = out_dir / "table8.tsv"
    table_path.write_text(evaluation.render_tsv(headers, rows), encoding="utf-8")
    write_manifest(out_dir, "transfer", asdict(cfg),
                   {"corpus": resolve_data_path(cfg.corpus),
                    "source_model": resolve_data_path(args.source_model)},
                   [str(table_path)])
    _print(evaluation.render_aligned(headers, rows))
    return 0


def cmd_neighbors(args) -> int:
    if args.dry_run:
        return _dry_run_plan(args, {
            "model": args.model, "word": args.word, "k": args.k})
    model = nnmodels.NeuralModel.load(resolve_data_path(args.model))
    E = model.embedding_matrix()
    try:
        ranked = embedspace.nearest_neighbors(E, args.word, args.k)
    except KeyError as exc:
        raise corpus.CorpusError(str(exc)) from None
    for word, sim in ranked:
        _print(f"{word}\t{sim:.4f}")
    return 0


def cmd_tsne(args) -> int:
    if args.dry_run:
        return _dry_run_plan(args, {
            "model": args.model, "top": args.top,
            "perplexity": args.perplexity, "iters": args.iters,
            "output": args.output})
    model = nnmodels.NeuralModel.load(resolve_data_path(args.model))
    E = model.embedding_matrix()
    words = embedspace.top_frequent_words(model.vocabulary, args.top)
    indices = [model.vocabulary.word_to_index[w] for w in words]
    projection = embedspace.tsne_project(
        E.rows[indices], words, perplexity=args.perplexity, iters=args.iters,
        seed=args.seed)
    embedspace.export_projection_tsv(projection, args.output)
    _print(f"wrote {len(words)} projected words to {args.output} "
           f"(final KL {projection.kl_trace[-1]:.4f})")
    return 0


def cmd_report(args) -> int:
    if args.dry_run:
        return _dry_run_plan(args, {"runs": args.runs})
    for run_dir in args.runs:
        run = Path(run_dir)
        manifest = run / "manifest.json"
        if manifest.exists():
            meta = json.loads(manifest.read_text())
            _print(f"== {run} ({meta.get('command', '?')}) ==")
        else:
            _print(f"== {run} ==")
        for table in sorted(run.glob("*.tsv")):
            headers, rows = evaluation.parse_tsv(table.read_text())
            _print(f"-- {table.name}")
            _print(evaluation.render_aligned(headers, rows))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _apply_overrides(cfg: ExperimentConfig, args):
    for key in ("corpus", "output_dir", "seed", "folds", "jobs", "dataset",
                "epochs", "oversample_rate"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="cbdetect",
                     description="cross-platform cyberbullying detection study")
    sub = parser.add_subparsers(dest="command")

    def add(name, fn, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(func=fn)
        p.add_argument("--dry-run", action="store_true",
                       help="print the resolved plan and exit")
        return p

    p = add("ingest", cmd_ingest, help="convert a raw platform export")
    p.add_argument("--platform", required=True, choices=corpus.PLATFORMS)
    p.add_argument("--input", required=True)
    p.add_argument("--annotations", default=None,
                   help="per-worker annotation file (Wikipedia)")
    p.add_argument("--output", required=True)

    p = add("stats", cmd_stats, help="swearing/anonymity probability table")
    p.add_argument("--corpus", action="append", required=True)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--stopwords", default=None)

    for name, fn in (("baseline", cmd_baseline), ("train", cmd_train),
                     ("evaluate", cmd_evaluate), ("transfer", cmd_transfer)):
        p = add(name, fn, help=f"run the {name} experiment")
        p.add_argument("--config", default=None)
        p.add_argument("--corpus", default=None)
        p.add_argument("--dataset", default=None, choices=corpus.PLATFORMS)
        p.add_argument("--output-dir", dest="output_dir", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--folds", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--epochs", type=int, default=None)
        if name == "baseline":
            p.add_argument("--kind", default="all",
                           choices=baselines.KINDS + ("all",))
            p.add_argument("--representation", default="both",
                           choices=("word", "char", "both"))
            p.add_argument("--oversample-rate", dest="oversample_rate",
                           type=int, default=1)
        else:
            p.add_argument("--oversample-rate", dest="oversample_rate",
                           type=int, default=None)
        if name == "evaluate":
            p.add_argument("--architectures", default=None,
                           help="comma list, e.g. CNN,LSTM,BLSTM,BLSTM_ATTN")
            p.add_argument("--inits", default=None,
                           help="comma list, e.g. random,glove,sswe")
        if name == "transfer":
            p.add_argument("--source-model", dest="source_model", required=False)
            p.add_argument("--flavors", default="TL1,TL2,TL3")

    p = add("neighbors", cmd_neighbors, help="nearest neighbors of a word")
    p.add_argument("--model", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--k", type=int, default=8)

    p = add("tsne", cmd_tsne, help="export a 2-d projection of embeddings")
    p.add_argument("--model", required=True)
    p.add_argument("--top", type=int, default=1000)
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)

    p = add("report", cmd_report, help="render stored run tables")
    p.add_argument("runs", nargs="+")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args) or 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
