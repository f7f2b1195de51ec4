"""Sparse text representations for the traditional baselines.

Two bag representations: character n-grams over the space-joined token
sequence, and word unigrams. Vectorizers follow the fit/transform
convention; the feature index is built from training folds only and is
frozen afterwards (unseen features are dropped at transform time).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .base import BaseEstimator, check_fitted

# a SparseVec is a dict feature-index -> positive count
SparseVec = dict[int, int]


@dataclass(frozen=True)
class FeatureIndex:
    feature_to_index: dict[str, int]
    kind: str  # "char_ngram(n_min,n_max)" or "word_unigram"

    def __len__(self):
        return len(self.feature_to_index)


def char_ngrams(text: str, n_min: int, n_max: int) -> Counter:
    """All contiguous substrings of lengths n_min..n_max, spaces included."""
    if not 1 <= n_min <= n_max:
        raise ValueError(f"require 1 <= n_min <= n_max, got [{n_min}, {n_max}]")
    grams = Counter()
    for n in range(n_min, n_max + 1):
        for i in range(len(text) - n + 1):
            grams[text[i:i + n]] += 1
    return grams


def _post_features(post, kind: str, n_min: int, n_max: int) -> Counter:
    if kind == "word":
        return Counter(post.tokens)
    return char_ngrams(" ".join(post.tokens), n_min, n_max)


def build_feature_index(posts, kind: str, n_min: int = 2, n_max: int = 4) -> FeatureIndex:
    """Index every feature seen in the given (training) posts, ordered by
    descending frequency with alphabetical tie-break."""
    freq = Counter()
    for post in posts:
        freq.update(_post_features(post, kind, n_min, n_max))
    ordered = sorted(freq, key=lambda f: (-freq[f], f))
    name = "word_unigram" if kind == "word" else f"char_ngram({n_min},{n_max})"
    return FeatureIndex({f: i for i, f in enumerate(ordered)}, name)


def vectorize(posts, index: FeatureIndex, kind: str,
              n_min: int = 2, n_max: int = 4) -> list[SparseVec]:
    """Count known features per post; unknown features are ignored and the
    index is never grown."""
    f2i = index.feature_to_index
    out = []
    for post in posts:
        vec: SparseVec = {}
        for feat, count in _post_features(post, kind, n_min, n_max).items():
            idx = f2i.get(feat)
            if idx is not None:
                vec[idx] = count
        out.append(vec)
    return out


def to_csr(vecs: list[SparseVec], n_features: int) -> sparse.csr_matrix:
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for vec in vecs:
        for idx in sorted(vec):
            indices.append(idx)
            data.append(vec[idx])
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64),
         np.asarray(indices, dtype=np.int64),
         np.asarray(indptr, dtype=np.int64)),
        shape=(len(vecs), n_features))


class _BagVectorizer(BaseEstimator):
    _kind = ""

    def fit(self, posts, y=None):
        self.feature_index_ = build_feature_index(
            posts, self._kind, self._n_min(), self._n_max())
        return self

    def transform(self, posts) -> list[SparseVec]:
        check_fitted(self, "feature_index_")
        return vectorize(posts, self.feature_index_, self._kind,
                         self._n_min(), self._n_max())

    def fit_transform(self, posts, y=None):
        return self.fit(posts).transform(posts)

    def transform_csr(self, posts) -> sparse.csr_matrix:
        return to_csr(self.transform(posts), len(self.feature_index_))

    def _n_min(self):
        return getattr(self, "n_min", 1)

    def _n_max(self):
        return getattr(self, "n_max", 1)


class CharNgramVectorizer(_BagVectorizer):
    """Bag of character n-grams over the space-joined preprocessed tokens."""

    _kind = "char"

    def __init__(self, n_min: int = 2, n_max: int = 4):
        if not 1 <= n_min <= n_max:
            raise ValueError(f"require 1 <= n_min <= n_max, got [{n_min}, {n_max}]")
        self.n_min = n_min
        self.n_max = n_max


class WordUnigramVectorizer(_BagVectorizer):
    """Bag of word unigrams over the preprocessed tokens."""

    _kind = "word"

    def __init__(self):
        pass
