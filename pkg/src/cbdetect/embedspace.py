"""Embedding initialization and analysis.

Random / pretrained-file initialization of the embedding matrix, cosine
nearest-neighbor queries over learned embeddings, and an exact O(N^2)
t-SNE projection (per-point bandwidths found by binary search on the
perplexity, early exaggeration, momentum gradient descent with gains).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import BaseEstimator, check_random_state
from .corpus import Vocabulary


class EmbeddingError(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingMatrix:
    rows: np.ndarray  # [V, d]
    vocabulary: Vocabulary

    def __post_init__(self):
        if self.rows.shape[0] != len(self.vocabulary):
            raise EmbeddingError(
                f"embedding rows {self.rows.shape[0]} != vocabulary size "
                f"{len(self.vocabulary)}")
        if not np.isfinite(self.rows).all():
            raise EmbeddingError("embedding matrix contains non-finite values")

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def vector(self, word: str) -> np.ndarray:
        if word not in self.vocabulary:
            raise KeyError(f"word {word!r} not in vocabulary")
        return self.rows[self.vocabulary.word_to_index[word]]


def init_random(vocab: Vocabulary, dim: int, seed: int = 0) -> EmbeddingMatrix:
    """Uniform rows in [-0.05, 0.05]; the PAD row is zero."""
    if dim < 1:
        raise ValueError(f"embedding dim must be >= 1, got {dim}")
    rng = check_random_state(seed)
    rows = rng.uniform(-0.05, 0.05, size=(len(vocab), dim))
    rows[vocab.pad_index] = 0.0
    return EmbeddingMatrix(rows=rows, vocabulary=vocab)


def load_pretrained(path, vocab: Vocabulary, dim: int,
                    seed: int = 0) -> tuple[EmbeddingMatrix, float]:
    """Copy vectors from a "word v1 .. vd" text file for the vocabulary
    words present in it; the rest fall back to seeded random rows.

    Returns (matrix, coverage fraction over non-sentinel vocabulary words).
    """
    E = init_random(vocab, dim, seed)
    rows = E.rows  # filled in place before returning
    found = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) <= 1 or not parts[0]:
                continue
            word = parts[0]
            if word not in vocab:
                continue
            values = parts[1:]
            if len(values) != dim:
                raise EmbeddingError(
                    f"{path}:{lineno}: vector for {word!r} has {len(values)} "
                    f"components, expected {dim}")
            try:
                rows[vocab.word_to_index[word]] = [float(v) for v in values]
            except ValueError:
                raise EmbeddingError(
                    f"{path}:{lineno}: non-numeric vector component") from None
            found += 1
    rows[vocab.pad_index] = 0.0
    denom = max(1, len(vocab) - 2)
    return EmbeddingMatrix(rows=rows, vocabulary=vocab), found / denom


def nearest_neighbors(E: EmbeddingMatrix, query: str, k: int) -> list[tuple[str, float]]:
    """Top-k words by cosine similarity to the query, excluding the query
    itself and the PAD/OOV sentinels; ties break toward the lower index."""
    vocab = E.vocabulary
    if query not in vocab:
        raise KeyError(f"query word {query!r} not in vocabulary")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    q_idx = vocab.word_to_index[query]
    norms = np.linalg.norm(E.rows, axis=1)
    q_norm = norms[q_idx]
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = (E.rows @ E.rows[q_idx]) / (norms * q_norm)
    sims = np.where((norms == 0) | (q_norm == 0), -np.inf, sims)
    sims[[vocab.pad_index, vocab.oov_index, q_idx]] = -np.inf
    # stable ranking: similarity descending, index ascending on ties
    order = np.lexsort((np.arange(len(sims)), -sims))
    top = [i for i in order if np.isfinite(sims[i])][:k]
    return [(vocab.index_to_word[i], float(sims[i])) for i in top]


# ---------------------------------------------------------------------------
# exact t-SNE
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Projection2D:
    coords: np.ndarray  # [N, 2]
    words: tuple[str, ...]
    kl_trace: tuple[float, ...]

    def __post_init__(self):
        if len(self.coords) != len(self.words):
            raise ValueError("one coordinate pair per word required")


def _conditional_probs(dist_row: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    p = np.exp(-dist_row * beta)
    total = p.sum()
    if total <= 0:
        return np.zeros_like(p), -np.inf
    p /= total
    # Shannon entropy in nats of the conditional distribution
    entropy = np.log(total) + beta * float((dist_row * p).sum())
    return p, entropy


def _binary_search_bandwidths(D: np.ndarray, perplexity: float,
                              tol: float = 1e-5, max_steps: int = 50) -> np.ndarray:
    n = D.shape[0]
    target = np.log(perplexity)
    P = np.zeros((n, n))
    for i in range(n):
        row = np.delete(D[i], i)
        beta, lo, hi = 1.0, 0.0, np.inf
        for _ in range(max_steps):
            p, entropy = _conditional_probs(row, beta)
            diff = entropy - target
            if abs(diff) <= tol:
                break
            if diff > 0:  # entropy too high: sharpen
                lo = beta
                beta = beta * 2.0 if np.isinf(hi) else (beta + hi) / 2.0
            else:
                hi = beta
                beta = beta / 2.0 if lo == 0.0 else (beta + lo) / 2.0
        P[i, np.arange(n) != i] = p
    return P


def _squared_distances(X: np.ndarray) -> np.ndarray:
    sq = (X * X).sum(axis=1)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.fill_diagonal(D, 0.0)
    return np.maximum(D, 0.0)


class ExactTSNE(BaseEstimator):
    """Exact t-SNE to 2 dimensions; deterministic given the seed."""

    def __init__(self, perplexity: float = 30.0, n_iter: int = 1000,
                 learning_rate: float = 200.0, seed: int = 0,
                 early_exaggeration: float = 12.0, exaggeration_iters: int = 250):
        self.perplexity = perplexity
        self.n_iter = n_iter
        self.learning_rate = learning_rate
        self.seed = seed
        self.early_exaggeration = early_exaggeration
        self.exaggeration_iters = exaggeration_iters

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        n = X.shape[0]
        if n <= 3 * self.perplexity:
            raise ValueError(
                f"perplexity {self.perplexity} too large for {n} points; "
                "need N > 3 * perplexity")
        P_cond = _binary_search_bandwidths(_squared_distances(X), self.perplexity)
        P = (P_cond + P_cond.T) / (2.0 * n)
        P = np.maximum(P, 1e-12)

        rng = check_random_state(self.seed)
        Y = rng.standard_normal((n, 2)) * 1e-4
        velocity = np.zeros_like(Y)
        gains = np.ones_like(Y)
        kl_trace = []
        for it in range(self.n_iter):
            exaggerating = it < self.exaggeration_iters
            P_eff = P * self.early_exaggeration if exaggerating else P
            num = 1.0 / (1.0 + _squared_distances(Y))
            np.fill_diagonal(num, 0.0)
            Q = np.maximum(num / num.sum(), 1e-12)
            M = (P_eff - Q) * num
            grad = 4.0 * (Y * M.sum(axis=1)[:, None] - M @ Y)
            momentum = 0.5 if exaggerating else 0.8
            same_sign = np.sign(grad) == np.sign(velocity)
            gains = np.where(same_sign, gains * 0.8, gains + 0.2)
            gains = np.maximum(gains, 0.01)
            velocity = momentum * velocity - self.learning_rate * gains * grad
            Y = Y + velocity
            Y = Y - Y.mean(axis=0)
            kl_trace.append(float((P * np.log(P / Q)).sum()))
        self.kl_trace_ = tuple(kl_trace)
        self.embedding_ = Y
        return Y


def tsne_project(rows: np.ndarray, words, perplexity: float = 30.0,
                 iters: int = 1000, seed: int = 0,
                 learning_rate: float = 200.0) -> Projection2D:
    """Project embedding rows (typically the most frequent words) to 2-d."""
    words = tuple(words)
    if len(words) != len(rows):
        raise ValueError("need exactly one word per row")
    tsne = ExactTSNE(perplexity=perplexity, n_iter=iters, seed=seed,
                     learning_rate=learning_rate)
    coords = tsne.fit_transform(rows)
    return Projection2D(coords=coords, words=words, kl_trace=tsne.kl_trace_)


def top_frequent_words(vocab: Vocabulary, n: int) -> list[str]:
    """Vocabulary indices are frequency-ordered, so the first n non-sentinel
    words are the n most frequent."""
    return list(vocab.index_to_word[2:2 + n])


def export_projection_tsv(projection: Projection2D, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("word\tx\ty\n")
        for word, (x, y) in zip(projection.words, projection.coords):
            fh.write(f"{word}\t{x:.6f}\t{y:.6f}\n")
