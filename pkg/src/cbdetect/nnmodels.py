"""The four neural text classifiers, assembled over the autodiff core.

Shared stack: embedding -> dropout(0.25) -> neural layer -> dropout(0.5)
-> dense -> softmax, trained with mini-batch Adam on categorical
cross-entropy. The architectures differ only in the neural layer:

* CNN        - parallel conv+maxpool blocks (windows 3/4/5, 100 filters each)
* LSTM       - forward LSTM, last non-PAD hidden state
* BLSTM      - bidirectional LSTM, final states of both directions
* BLSTM_ATTN - bidirectional LSTM with attention pooling

Trained models serialize to a "CBNN1" binary file.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .base import BaseEstimator, check_fitted, check_random_state, spawn_seed
from .corpus import LABEL_SPACES, Vocabulary, build_vocabulary, nearest_rank_percentile
from .embedspace import EmbeddingMatrix, init_random, load_pretrained
from .serialize import NEURAL_MAGIC, load_model_file, save_model_file

logger = logging.getLogger(__name__)

ARCHITECTURES = ("CNN", "LSTM", "BLSTM", "BLSTM_ATTN")
EMBED_INITS = ("random", "glove", "sswe")


class TrainingDivergedError(FloatingPointError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    architecture: str
    classes: int
    max_len: int
    embed_dim: int = 50
    hidden: int = 50
    dropout_pre: float = 0.25
    dropout_post: float = 0.5
    epochs: int = 10
    batch: int = 128
    lr: float = 1e-3
    seed: int = 0
    embed_init: str = "random"
    freeze_embeddings: bool = False
    cnn_windows: tuple[int, ...] = (3, 4, 5)
    cnn_filters: int = 100
    dtype: str = "float64"

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(
                f"unknown architecture {self.architecture!r}; "
                f"expected one of {ARCHITECTURES}")
        if self.classes < 2:
            raise ValueError("classes must be >= 2")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")
        for name in ("dropout_pre", "dropout_post"):
            rate = getattr(self, name)
            if not 0.0 <= rate < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {rate}")
        if self.embed_init not in EMBED_INITS:
            raise ValueError(
                f"unknown embed_init {self.embed_init!r}; "
                f"expected one of {EMBED_INITS}")
        if self.architecture == "CNN" and self.max_len < max(self.cnn_windows):
            raise ValueError(
                f"CNN windows {self.cnn_windows} need max_len >= "
                f"{max(self.cnn_windows)}, got {self.max_len}")
        if self.dtype not in ("float64", "float32"):
            raise ValueError("dtype must be 'float64' or 'float32'")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["cnn_windows"] = list(self.cnn_windows)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["cnn_windows"] = tuple(d.get("cnn_windows", (3, 4, 5)))
        return cls(**d)


@dataclass
class NeuralModel:
    """Parameter container for one architecture; also the TrainedModel."""

    config: ModelConfig
    vocabulary: Vocabulary
    label_space: tuple[str, ...]
    embedding: ad.Tensor
    layers: dict
    loss_trace: list[float] = field(default_factory=list)

    def parameters(self) -> dict[str, ad.Tensor]:
        named: dict[str, ad.Tensor] = {"embedding": self.embedding}
        for name, layer in self.layers.items():
            if isinstance(layer, ad.LSTMParams):
                named[f"{name}.Wx"] = layer.Wx
                named[f"{name}.Wh"] = layer.Wh
                named[f"{name}.b"] = layer.b
            elif isinstance(layer, ad.AttentionParams):
                named[f"{name}.W"] = layer.W
                named[f"{name}.b"] = layer.b
                named[f"{name}.u"] = layer.u
            else:  # (weights, bias) pair
                named[f"{name}.W"] = layer[0]
                named[f"{name}.b"] = layer[1]
        return named

    def parameter_checksum(self) -> str:
        import hashlib
        h = hashlib.sha256()
        for name in sorted(self.parameters()):
            h.update(name.encode())
            h.update(np.ascontiguousarray(self.parameters()[name].values).tobytes())
        return h.hexdigest()

    def embedding_matrix(self) -> EmbeddingMatrix:
        return EmbeddingMatrix(rows=np.asarray(self.embedding.values, dtype=np.float64),
                               vocabulary=self.vocabulary)

    def save(self, path):
        header = {
            "config": self.config.as_dict(),
            "label_space": list(self.label_space),
            "vocabulary": list(self.vocabulary.index_to_word),
            "loss_trace": self.loss_trace,
        }
        arrays = {name: t.values for name, t in self.parameters().items()}
        save_model_file(path, NEURAL_MAGIC, header, arrays)

    @classmethod
    def load(cls, path) -> "NeuralModel":
        header, arrays = load_model_file(path, NEURAL_MAGIC)
        config = ModelConfig.from_dict(header["config"])
        words = tuple(header["vocabulary"])
        vocab = Vocabulary(
            word_to_index={w: i for i, w in enumerate(words)},
            index_to_word=words)
        model = build_model(config, vocab, arrays["embedding"],
                            label_space=tuple(header["label_space"]))
        for name, tensor in model.parameters().items():
            tensor.values[...] = arrays[name].astype(tensor.dtype)
        model.loss_trace = list(header.get("loss_trace", []))
        return model


def build_model(config: ModelConfig, vocab: Vocabulary, E0,
                label_space=None) -> NeuralModel:
    """Instantiate parameters for the configured architecture; the embedding
    is initialized from E0 and everything else from the config seed."""
    if isinstance(E0, EmbeddingMatrix):
        E0 = E0.rows
    E0 = np.asarray(E0)
    if E0.shape != (len(vocab), config.embed_dim):
        raise ValueError(
            f"embedding shape {E0.shape} does not match (|vocab|, embed_dim) "
            f"= ({len(vocab)}, {config.embed_dim})")
    dtype = np.float64 if config.dtype == "float64" else np.float32
    rng = check_random_state(spawn_seed(config.seed, 0))
    d, H, C = config.embed_dim, config.hidden, config.classes
    layers: dict = {}
    if config.architecture == "CNN":
        for w in config.cnn_windows:
            filt = ad.glorot_uniform(rng, (w, d, config.cnn_filters),
                                     fan_in=w * d, fan_out=config.cnn_filters,
                                     dtype=dtype)
            layers[f"conv{w}"] = (ad.Tensor(filt, f"conv{w}.W"),
                                  ad.Tensor(np.zeros(config.cnn_filters, dtype=dtype),
                                            f"conv{w}.b"))
        feat_width = len(config.cnn_windows) * config.cnn_filters
    elif config.architecture == "LSTM":
        layers["lstm_fwd"] = ad.init_lstm_params(rng, d, H, dtype)
        feat_width = H
    else:
        layers["lstm_fwd"] = ad.init_lstm_params(rng, d, H, dtype)
        layers["lstm_bwd"] = ad.init_lstm_params(rng, d, H, dtype)
        feat_width = 2 * H
        if config.architecture == "BLSTM_ATTN":
            layers["attn"] = ad.init_attention_params(rng, 2 * H, dtype)
    W_out = ad.glorot_uniform(rng, (feat_width, C), dtype=dtype)
    layers["out"] = (ad.Tensor(W_out, "out.W"),
                     ad.Tensor(np.zeros(C, dtype=dtype), "out.b"))
    embedding = ad.Tensor(E0.astype(dtype), "embedding")
    embedding.values[vocab.pad_index] = 0.0
    return NeuralModel(config=config, vocabulary=vocab,
                       label_space=tuple(label_space or ()),
                       embedding=embedding, layers=layers)


def encode_posts(posts, vocab: Vocabulary, max_len: int):
    ids = np.zeros((len(posts), max_len), dtype=np.int64)
    lengths = np.zeros(len(posts), dtype=np.int64)
    for i, post in enumerate(posts):
        row, n = vocab.encode(list(post.tokens), max_len)
        ids[i] = row
        lengths[i] = n
    return ids, lengths


def forward(model: NeuralModel, ids: np.ndarray, lengths: np.ndarray,
            mode: str = "eval", tape: ad.Tape | None = None,
            rng: np.random.Generator | None = None) -> ad.Tensor:
    cfg = model.config
    mask = ids != model.vocabulary.pad_index
    emb = ad.embedding_lookup(tape, ids, model.embedding)
    emb = ad.dropout(tape, emb, cfg.dropout_pre, mode, rng)
    if cfg.architecture == "CNN":
        pooled = [
            ad.conv1d_maxpool(tape, emb, *model.layers[f"conv{w}"])
            for w in cfg.cnn_windows
        ]
        feats = ad.concat_cols(tape, pooled)
    elif cfg.architecture == "LSTM":
        seq = ad.run_sequence(tape, emb, model.layers["lstm_fwd"], "forward", mask)
        feats = ad.sequence_last(tape, seq, lengths)
    else:
        params = (model.layers["lstm_fwd"], model.layers["lstm_bwd"])
        seq = ad.run_sequence(tape, emb, params, "both", mask)
        if cfg.architecture == "BLSTM":
            feats = ad.sequence_last(tape, seq, lengths, bidirectional=True)
        else:
            feats, _ = ad.attention_pool(tape, seq, model.layers["attn"], mask)
    feats = ad.dropout(tape, feats, cfg.dropout_post, mode, rng)
    return ad.dense(tape, feats, *model.layers["out"])


def train_model(model: NeuralModel, train_posts, config: ModelConfig | None = None,
                labels=None) -> NeuralModel:
    """Mini-batch Adam over shuffled epochs; returns the model with its
    per-epoch mean loss trace filled in."""
    cfg = config or model.config
    if not model.label_space:
        raise ValueError("model.label_space must be set before training")
    label_index = {lbl: i for i, lbl in enumerate(model.label_space)}
    labels = [p.label for p in train_posts] if labels is None else list(labels)
    try:
        y = np.asarray([label_index[lbl] for lbl in labels], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(
            f"label {exc.args[0]!r} not in model label space "
            f"{model.label_space}") from None
    ids, lengths = encode_posts(train_posts, model.vocabulary, cfg.max_len)
    params = model.parameters()
    trainable = {
        name: p for name, p in params.items()
        if not (cfg.freeze_embeddings and name == "embedding")
    }
    states = {name: ad.AdamState.for_param(p, lr=cfg.lr)
              for name, p in trainable.items()}
    shuffle_rng = check_random_state(spawn_seed(cfg.seed, 1))
    dropout_rng = check_random_state(spawn_seed(cfg.seed, 2))
    N = len(train_posts)
    pad = model.vocabulary.pad_index
    for epoch in range(cfg.epochs):
        perm = shuffle_rng.permutation(N)
        batch_losses = []
        for start in range(0, N, cfg.batch):
            idx = perm[start:start + cfg.batch]
            tape = ad.Tape()
            logits = forward(model, ids[idx], lengths[idx], "train", tape, dropout_rng)
            try:
                loss, _ = ad.softmax_xent(tape, logits, y[idx])
            except FloatingPointError as exc:
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch {start // cfg.batch}; "
                    f"inputs or learning rate {cfg.lr} likely too aggressive") from exc
            tape.backward(loss)
            model.embedding.grad[pad] = 0.0  # PAD row stays zero
            for name, p in trainable.items():
                ad.adam_update(p, states[name])
            for p in params.values():
                p.zero_grad()
            batch_losses.append(float(loss.values))
        model.loss_trace.append(float(np.mean(batch_losses)))
    return model


def predict(model: NeuralModel, posts, batch: int = 256) -> tuple[list[str], np.ndarray]:
    """Eval-mode forward; returns (argmax labels, class probabilities)."""
    ids, lengths = encode_posts(posts, model.vocabulary, model.config.max_len)
    probs = np.zeros((len(posts), model.config.classes))
    for start in range(0, len(posts), batch):
        sl = slice(start, start + batch)
        logits = forward(model, ids[sl], lengths[sl], "eval", None, None)
        z = logits.values - logits.values.max(axis=1, keepdims=True)
        e = np.exp(z)
        probs[sl] = e / e.sum(axis=1, keepdims=True)
    labels = [model.label_space[i] for i in probs.argmax(axis=1)]
    return labels, probs


# ---------------------------------------------------------------------------
# estimator wrapper
# ---------------------------------------------------------------------------

class NeuralTextClassifier(BaseEstimator):
    """fit/predict over Post lists: builds the vocabulary and embedding
    matrix from the training posts only, then trains the configured
    architecture. max_len=None derives the 95th-percentile length of the
    training posts."""

    def __init__(self, architecture: str = "BLSTM_ATTN", embed_dim: int = 50,
                 hidden: int = 50, dropout_pre: float = 0.25,
                 dropout_post: float = 0.5, epochs: int = 10, batch: int = 128,
                 lr: float = 1e-3, seed: int = 0, embed_init: str = "random",
                 embed_path=None, freeze_embeddings: bool = False,
                 max_len: int | None = None, min_count: int = 1,
                 dtype: str = "float64", label_space=None):
        self.architecture = architecture
        self.embed_dim = embed_dim
        self.hidden = hidden
        self.dropout_pre = dropout_pre
        self.dropout_post = dropout_post
        self.epochs = epochs
        self.batch = batch
        self.lr = lr
        self.seed = seed
        self.embed_init = embed_init
        self.embed_path = embed_path
        self.freeze_embeddings = freeze_embeddings
        self.max_len = max_len
        self.min_count = min_count
        self.dtype = dtype
        self.label_space = label_space

    def _initial_embeddings(self, vocab) -> EmbeddingMatrix:
        if self.embed_init == "random":
            return init_random(vocab, self.embed_dim, seed=spawn_seed(self.seed, 3))
        if self.embed_path is None:
            raise ValueError(
                f"embed_init={self.embed_init!r} requires embed_path")
        E, coverage = load_pretrained(self.embed_path, vocab, self.embed_dim,
                                      seed=spawn_seed(self.seed, 3))
        logger.info("pretrained coverage %.3f from %s", coverage, self.embed_path)
        return E

    def build_config(self, posts, label_space) -> ModelConfig:
        max_len = self.max_len
        if max_len is None:
            max_len = nearest_rank_percentile([len(p.tokens) for p in posts], 95)
            max_len = max(max_len, 5)  # CNN windows need at least 5
        return ModelConfig(
            architecture=self.architecture, classes=len(label_space),
            max_len=int(max_len), embed_dim=self.embed_dim, hidden=self.hidden,
            dropout_pre=self.dropout_pre, dropout_post=self.dropout_post,
            epochs=self.epochs, batch=self.batch, lr=self.lr, seed=self.seed,
            embed_init=self.embed_init,
            freeze_embeddings=self.freeze_embeddings, dtype=self.dtype)

    def fit(self, posts, y=None):
        labels = [p.label for p in posts] if y is None else list(y)
        space = self.label_space or LABEL_SPACES.get(posts[0].platform)
        if space is None:
            space = tuple(dict.fromkeys(labels))
        space = tuple(s for s in space if s in set(labels))
        vocab = build_vocabulary(_dedup_for_vocab(posts), min_count=self.min_count)
        config = self.build_config(posts, space)
        E0 = self._initial_embeddings(vocab)
        self.model_ = build_model(config, vocab, E0, label_space=space)
        train_model(self.model_, posts, config, labels=labels)
        return self

    def predict(self, posts) -> list[str]:
        check_fitted(self, "model_")
        return predict(self.model_, posts)[0]

    def predict_proba(self, posts) -> np.ndarray:
        check_fitted(self, "model_")
        return predict(self.model_, posts)[1]


def _dedup_for_vocab(posts):
    """Oversampled training lists repeat post ids; vocabulary construction
    wants each post once (replication must not inflate frequency ranks)."""
    seen = set()
    out = []
    for p in posts:
        if p.id not in seen:
            seen.add(p.id)
            out.append(p)
    return out
