"""Shared fixtures for the acceptance suite.

Expensive experiment fixtures are session-scoped so the criteria share one
set of trained models. Real public corpora are picked up from canonical
files under $CB_DATA_DIR when present (see README); the pattern criteria
otherwise run on the generated surrogate corpora.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthetic import (generate_formspring_like, generate_wikipedia_like,
                       write_embedding_file)

from cbdetect.corpus import load_dataset, minority_classes, oversample, truncate
from cbdetect.evaluation import cross_validate
from cbdetect.nnmodels import NeuralTextClassifier

# one cross-validation seed for the whole acceptance run; the determinism
# criterion re-runs with the same seed and compares bit-for-bit
CV_SEED = 11
NN_PARAMS = dict(embed_dim=32, hidden=32, epochs=12, batch=128, lr=1e-3, seed=0)
# the long-post corpus needs more epochs before the non-recurrent readers
# converge; the last-state LSTM's weakness there is structural, not budget
W_EPOCHS = 16


def real_corpus(name: str):
    """Load a canonical real corpus from $CB_DATA_DIR if the user provided
    one (formspring.tsv / twitter.tsv / wikipedia.tsv)."""
    root = os.environ.get("CB_DATA_DIR")
    if not root:
        return None
    path = Path(root) / f"{name.lower()}.tsv"
    if not path.exists():
        return None
    platform = name.capitalize()
    corpus = load_dataset(platform, path)
    return truncate(corpus, corpus.length_at_95)


def require_real(name: str):
    corpus = real_corpus(name)
    if corpus is None:
        pytest.skip(
            f"real {name} corpus not available (no canonical {name.lower()}.tsv "
            f"under CB_DATA_DIR); published-value check runs only with the public "
            f"data, surrogate pattern checks cover this criterion here")
    return corpus


@pytest.fixture(scope="session")
def surrogate_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("surrogates")


@pytest.fixture(scope="session")
def surrogate_f(surrogate_dir):
    corpus, _ = generate_formspring_like(surrogate_dir)
    return corpus


@pytest.fixture(scope="session")
def surrogate_w(surrogate_dir):
    corpus, _ = generate_wikipedia_like(surrogate_dir)
    return corpus


@pytest.fixture(scope="session")
def vectors_files(surrogate_dir, surrogate_f, surrogate_w):
    """Two distinct pretrained-vector files standing in for the GloVe and
    SSWE lookups (same file format, different contents)."""
    corpora = [surrogate_f, surrogate_w]
    return {
        "glove": write_embedding_file(surrogate_dir, corpora, seed=7,
                                      name="glove_like.txt"),
        "sswe": write_embedding_file(surrogate_dir, corpora, seed=8,
                                     name="sswe_like.txt"),
    }


def attention_estimator(corpus, init="random", vectors=None,
                        architecture="BLSTM_ATTN", epochs=None):
    params = dict(NN_PARAMS)
    if epochs is not None:
        params["epochs"] = epochs
    return NeuralTextClassifier(
        architecture=architecture, max_len=corpus.length_at_95,
        embed_init=init, embed_path=str(vectors) if vectors else None,
        **params)


def run_cv(corpus, rate, init="random", vectors=None,
           architecture="BLSTM_ATTN", epochs=None):
    est = attention_estimator(corpus, init, vectors, architecture, epochs)
    return cross_validate(corpus, est, k=5, oversample_rate=rate, seed=CV_SEED)


@pytest.fixture(scope="session")
def oversampling_reports(surrogate_f, vectors_files):
    """BLSTM_ATTN on the short-post surrogate: {(init, rate): FoldReport}."""
    reports = {}
    for init in ("random", "glove", "sswe"):
        vectors = vectors_files.get(init)
        for rate in (1, 3):
            reports[(init, rate)] = run_cv(surrogate_f, rate, init, vectors)
    return reports


@pytest.fixture(scope="session")
def architecture_reports(surrogate_w):
    """All four architectures on the oversampled long-post surrogate."""
    return {
        arch: run_cv(surrogate_w, 3, architecture=arch, epochs=W_EPOCHS)
        for arch in ("CNN", "LSTM", "BLSTM", "BLSTM_ATTN")
    }


def train_full_oversampled(corpus, epochs=None):
    posts = oversample(list(corpus.posts), minority_classes(corpus.label_space),
                       3, seed=CV_SEED)
    est = attention_estimator(corpus, epochs=epochs)
    return est.fit(posts).model_


@pytest.fixture(scope="session")
def source_models(surrogate_f, surrogate_w):
    """Fully trained oversampled models for both surrogate platforms."""
    return {
        "F+": train_full_oversampled(surrogate_f),
        "W+": train_full_oversampled(surrogate_w, epochs=W_EPOCHS),
    }
