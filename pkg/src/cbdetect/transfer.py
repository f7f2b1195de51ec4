"""Cross-dataset transfer learning.

Three flavors: TL1 evaluates a trained model directly on another corpus
with zero parameter writes; TL2 carries only the learned word embeddings
into a freshly initialized model trained on the target; TL3 additionally
seeds the new model's layer weights from the source. Label spaces are
collapsed to binary (anything but "none" counts as bullying) so Twitter's
three classes compose with the binary corpora.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .base import BaseEstimator, check_fitted, spawn_seed
from .corpus import LabeledCorpus, Vocabulary, build_vocabulary
from .embedspace import EmbeddingMatrix, init_random
from .evaluation import FoldReport, Metrics, confusion, cross_validate, metrics_from_confusion
from .nnmodels import (ModelConfig, NeuralModel, _dedup_for_vocab, build_model,
                       predict, train_model)

FLAVORS = ("TL1", "TL2", "TL3")
BINARY_SPACE = ("bully", "none")


class TransferError(ValueError):
    pass


def collapse_label(label: str) -> str:
    return "none" if label == "none" else "bully"


def relabel_binary(corpus: LabeledCorpus) -> LabeledCorpus:
    """Collapse every non-"none" class to "bully" so cross-platform label
    spaces line up."""
    if corpus.label_space == BINARY_SPACE:
        return corpus
    posts = tuple(replace(p, label=collapse_label(p.label)) for p in corpus.posts)
    return LabeledCorpus.from_posts(
        posts, BINARY_SPACE,
        vocabulary_size_with_stopwords=corpus.vocabulary_size_with_stopwords)


@dataclass(frozen=True)
class TransferPlan:
    flavor: str
    source: str
    target: str

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise TransferError(f"unknown flavor {self.flavor!r}")
        if self.source == self.target:
            raise TransferError("source and target datasets must differ")


def align_vocab(E_source: EmbeddingMatrix, vocab_target: Vocabulary,
                seed: int = 0) -> tuple[EmbeddingMatrix, float]:
    """Carry source vectors over for shared words; target-only words get
    seeded random rows. Returns (matrix, shared fraction of the target's
    non-sentinel vocabulary)."""
    E = init_random(vocab_target, E_source.dim, seed)
    rows = E.rows
    src_vocab = E_source.vocabulary
    shared = 0
    for idx in range(2, len(vocab_target)):
        word = vocab_target.index_to_word[idx]
        if word in src_vocab:
            rows[idx] = E_source.rows[src_vocab.word_to_index[word]]
            shared += 1
    overlap = shared / max(1, len(vocab_target) - 2)
    return EmbeddingMatrix(rows=rows, vocabulary=vocab_target), overlap


def tl1_evaluate(source_model: NeuralModel, target_corpus: LabeledCorpus,
                 plan: TransferPlan | None = None) -> Metrics:
    """Direct cross-dataset evaluation in the binary space; asserts that no
    parameter is written anywhere in the process."""
    before = source_model.parameter_checksum()
    posts = target_corpus.posts
    raw_pred, _ = predict(source_model, posts)
    pred = [collapse_label(lbl) for lbl in raw_pred]
    truth = [collapse_label(p.label) for p in posts]
    C = confusion(truth, pred, BINARY_SPACE)
    after = source_model.parameter_checksum()
    if before != after:
        raise AssertionError("TL1 must not write any parameter")
    return metrics_from_confusion(C, BINARY_SPACE)


def _check_same_architecture(source: ModelConfig, target: ModelConfig):
    mismatches = [
        name for name in ("architecture", "hidden", "embed_dim",
                          "cnn_windows", "cnn_filters")
        if getattr(source, name) != getattr(target, name)
    ]
    if mismatches:
        raise TransferError(
            f"TL3 requires the same architecture on both sides; "
            f"differs in {', '.join(mismatches)}")


def copy_layer_weights(source: NeuralModel, target: NeuralModel):
    """TL3 weight transplant: all non-embedding layers; the output layer
    only when the class counts match."""
    _check_same_architecture(source.config, target.config)
    copy_out = source.config.classes == target.config.classes
    src = source.parameters()
    for name, tensor in target.parameters().items():
        if name == "embedding":
            continue
        if name.startswith("out.") and not copy_out:
            continue
        tensor.values[...] = src[name].values.astype(tensor.dtype)


class TransferClassifier(BaseEstimator):
    """fit/predict estimator for TL2/TL3 training on a (binary-labeled)
    target fold: embeddings come from the source model via vocabulary
    alignment, and TL3 additionally transplants the layer weights."""

    def __init__(self, source_model: NeuralModel, flavor: str = "TL2",
                 epochs: int = 10, batch: int = 128, lr: float = 1e-3,
                 seed: int = 0, max_len: int | None = None,
                 min_count: int = 1, label_space=BINARY_SPACE):
        if flavor not in ("TL2", "TL3"):
            raise TransferError(
                f"flavor {flavor!r} is not trainable; TL1 uses tl1_evaluate")
        self.source_model = source_model
        self.flavor = flavor
        self.epochs = epochs
        self.batch = batch
        self.lr = lr
        self.seed = seed
        self.max_len = max_len
        self.min_count = min_count
        self.label_space = label_space

    def fit(self, posts, y=None):
        source = self.source_model
        vocab = build_vocabulary(_dedup_for_vocab(posts), min_count=self.min_count)
        E0, overlap = align_vocab(source.embedding_matrix(), vocab,
                                  seed=spawn_seed(self.seed, 3))
        self.vocab_overlap_ = overlap
        max_len = self.max_len or source.config.max_len
        config = replace(
            source.config, classes=len(self.label_space), max_len=max_len,
            epochs=self.epochs, batch=self.batch, lr=self.lr, seed=self.seed)
        self.model_ = build_model(config, vocab, E0,
                                  label_space=tuple(self.label_space))
        if self.flavor == "TL3":
            copy_layer_weights(source, self.model_)
        train_model(self.model_, posts, config)
        return self

    def predict(self, posts):
        check_fitted(self, "model_")
        return predict(self.model_, posts)[0]


def tl2_train(source_model: NeuralModel, target_posts, config_overrides=None,
              seed: int = 0) -> NeuralModel:
    """Train a new model on the target posts with source-aligned embeddings."""
    clf = TransferClassifier(source_model, flavor="TL2", seed=seed,
                             **(config_overrides or {}))
    return clf.fit(list(target_posts)).model_


def tl3_train(source_model: NeuralModel, target_posts, config_overrides=None,
              seed: int = 0) -> NeuralModel:
    """TL2 plus transplanting the source's layer weights as initialization."""
    clf = TransferClassifier(source_model, flavor="TL3", seed=seed,
                             **(config_overrides or {}))
    return clf.fit(list(target_posts)).model_


def transfer_cross_validate(source_model: NeuralModel,
                            target_corpus: LabeledCorpus, flavor: str,
                            k: int = 5, oversample_rate: int = 3,
                            seed: int = 0, jobs: int = 1,
                            **estimator_kw) -> FoldReport:
    """5-fold protocol on the binary-relabeled target corpus."""
    binary = relabel_binary(target_corpus)
    est = TransferClassifier(source_model, flavor=flavor, seed=seed,
                             **estimator_kw)
    return cross_validate(binary, est, k=k, oversample_rate=oversample_rate,
                          seed=seed, jobs=jobs)
