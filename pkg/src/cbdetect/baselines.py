"""Traditional classifiers over sparse bag features.

Four trainers, all written on numpy/scipy.sparse so runs are
bit-reproducible given (data, hyperparameters, seed):

* LR  - multinomial logistic loss + L2, full-batch gradient descent
* NB  - multinomial naive Bayes with Laplace smoothing (alpha=1)
* SVM - one-vs-rest hinge loss + L2 via seeded mini-batch subgradient descent
* RF  - Gini trees over features hashed to 4096 dims, sqrt(d) feature
        subsampling per node, bootstrap per tree

Models serialize to a "CBBL1" binary file.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .base import BaseEstimator, check_fitted, check_random_state
from .corpus import LABEL_SPACES
from .features import CharNgramVectorizer, WordUnigramVectorizer, to_csr
from .serialize import BASELINE_MAGIC, load_model_file, save_model_file

KINDS = ("LR", "NB", "SVM", "RF")

DEFAULT_HYPER = {
    "LR": {"lr": 0.5, "l2": 1e-4, "epochs": 100, "tol": 1e-6},
    "NB": {"alpha": 1.0},
    "SVM": {"lr": 0.05, "l2": 1e-4, "epochs": 100, "batch": 64},
    "RF": {"n_trees": 100, "max_depth": 20, "hash_dim": 4096,
           "min_samples_split": 2},
}


@dataclass
class BaselineModel:
    kind: str
    label_space: tuple[str, ...]
    n_features: int
    hyper: dict
    arrays: dict[str, np.ndarray]
    loss_trace: list[float] = field(default_factory=list)

    def save(self, path):
        header = {
            "kind": self.kind,
            "label_space": list(self.label_space),
            "n_features": self.n_features,
            "hyper": self.hyper,
        }
        save_model_file(path, BASELINE_MAGIC, header, self.arrays)

    @classmethod
    def load(cls, path) -> "BaselineModel":
        header, arrays = load_model_file(path, BASELINE_MAGIC)
        return cls(kind=header["kind"],
                   label_space=tuple(header["label_space"]),
                   n_features=header["n_features"],
                   hyper=header["hyper"], arrays=arrays)


def _as_csr(X, n_features: int | None = None) -> sparse.csr_matrix:
    if sparse.issparse(X):
        return X.tocsr()
    if n_features is None:
        n_features = max((max(v) + 1 for v in X if v), default=0)
    return to_csr(X, n_features)


def _encode_labels(y, label_space) -> np.ndarray:
    index = {label: i for i, label in enumerate(label_space)}
    try:
        return np.asarray([index[label] for label in y], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]!r} not in {label_space}") from None


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# trainers
# ---------------------------------------------------------------------------

def _train_lr(X, y, C, hyper, rng):
    N, F = X.shape
    W = np.zeros((F, C))
    b = np.zeros(C)
    onehot = np.zeros((N, C))
    onehot[np.arange(N), y] = 1.0
    lr, l2, epochs, tol = hyper["lr"], hyper["l2"], hyper["epochs"], hyper["tol"]
    trace = []
    prev = np.inf
    for _ in range(int(epochs)):
        probs = _softmax(X @ W + b)
        loss = (-np.log(np.maximum(probs[np.arange(N), y], 1e-300)).mean()
                + 0.5 * l2 * float((W * W).sum()))
        trace.append(float(loss))
        d = (probs - onehot) / N
        W -= lr * ((X.T @ d) + l2 * W)
        b -= lr * d.sum(axis=0)
        if abs(prev - loss) < tol:
            break
        prev = loss
    return {"W": W, "b": b}, trace


def _train_nb(X, y, C, hyper, rng):
    N, F = X.shape
    alpha = hyper["alpha"]
    class_counts = np.zeros(C)
    word_counts = np.zeros((C, F))
    for c in range(C):
        mask = y == c
        class_counts[c] = mask.sum()
        if mask.any():
            word_counts[c] = np.asarray(X[mask].sum(axis=0)).ravel()
    log_prior = np.log(np.maximum(class_counts, 1e-300)) - np.log(N)
    log_lik = (np.log(word_counts + alpha)
               - np.log(word_counts.sum(axis=1, keepdims=True) + alpha * F))
    return {"log_prior": log_prior, "log_lik": log_lik}, []


def _train_svm(X, y, C, hyper, rng):
    N, F = X.shape
    W = np.zeros((C, F))
    b = np.zeros(C)
    lr, l2, epochs, batch = hyper["lr"], hyper["l2"], int(hyper["epochs"]), int(hyper["batch"])
    targets = np.where(
        np.arange(C)[None, :] == y[:, None], 1.0, -1.0)  # [N, C]
    trace = []
    for _ in range(epochs):
        order = rng.permutation(N)
        epoch_loss = 0.0
        for start in range(0, N, batch):
            idx = order[start:start + batch]
            Xb = X[idx]
            tb = targets[idx]
            scores = Xb @ W.T + b  # [B, C]
            margins = tb * scores
            viol = margins < 1.0
            epoch_loss += float(np.maximum(0.0, 1.0 - margins).sum())
            coeff = np.where(viol, -tb, 0.0) / len(idx)  # d hinge / d score
            W -= lr * (coeff.T @ Xb + l2 * W)
            b -= lr * coeff.sum(axis=0)
        trace.append(epoch_loss / N + 0.5 * l2 * float((W * W).sum()))
    return {"W": W, "b": b}, trace


def effective_hash_dim(n_features: int, cap: int) -> int:
    """Smallest power of two >= n_features, capped. Power-of-two moduli make
    the odd-multiplier hash injective whenever n_features <= dim, so small
    feature spaces are only permuted, never collided."""
    d = 2
    while d < min(max(n_features, 2), cap):
        d *= 2
    return d


def hash_features(X, hash_dim: int) -> np.ndarray:
    """Fold a sparse count matrix into a dense matrix using a fixed
    multiplicative hash of the column index (runs are reproducible)."""
    X = _as_csr(X)
    N, F = X.shape
    dim = effective_hash_dim(F, hash_dim)
    cols = (np.arange(F, dtype=np.uint64) * np.uint64(2654435761)) % np.uint64(dim)
    out = np.zeros((N, dim))
    coo = X.tocoo()
    np.add.at(out, (coo.row, cols[coo.col].astype(np.int64)), coo.data)
    return out


def _gini_impurity(counts: np.ndarray) -> np.ndarray:
    total = counts.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(total > 0, counts / total, 0.0)
    return 1.0 - (p * p).sum(axis=-1)


def _build_tree(Xh, y, C, rng, max_depth, min_split):
    n_feat = Xh.shape[1]
    m_try = max(1, int(np.sqrt(n_feat)))
    feature, threshold = [], []
    left, right, leaf_class = [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf_class.append(-1)
        return len(feature) - 1

    def majority(idx):
        counts = np.bincount(y[idx], minlength=C)
        return int(counts.argmax())  # ties break toward the first label

    def grow(idx, depth):
        node = new_node()
        labels = y[idx]
        if (depth >= max_depth or len(idx) < min_split
                or (labels == labels[0]).all()):
            leaf_class[node] = majority(idx)
            return node
        cands = rng.choice(n_feat, size=m_try, replace=False)
        best = (None, None, np.inf)
        onehot = np.zeros((len(idx), C))
        onehot[np.arange(len(idx)), labels] = 1.0
        total = onehot.sum(axis=0)
        parent_n = float(len(idx))
        for f in cands:
            vals = Xh[idx, f]
            uniq = np.unique(vals)
            if len(uniq) < 2:
                continue
            if len(uniq) > 6:
                qs = np.quantile(uniq, [0.1, 0.3, 0.5, 0.7, 0.9])
                cuts = np.unique(qs)
            else:
                cuts = (uniq[:-1] + uniq[1:]) / 2.0
            mask = vals[:, None] <= cuts[None, :]  # [n, t]
            left_counts = mask.T.astype(float) @ onehot  # [t, C]
            right_counts = total[None, :] - left_counts
            nl = left_counts.sum(axis=1)
            nr = right_counts.sum(axis=1)
            valid = (nl > 0) & (nr > 0)
            if not valid.any():
                continue
            score = (nl * _gini_impurity(left_counts)
                     + nr * _gini_impurity(right_counts)) / parent_n
            score = np.where(valid, score, np.inf)
            t_best = int(score.argmin())
            if score[t_best] < best[2]:
                best = (int(f), float(cuts[t_best]), float(score[t_best]))
        if best[0] is None:
            leaf_class[node] = majority(idx)
            return node
        f, cut, _ = best
        go_left = Xh[idx, f] <= cut
        feature[node] = f
        threshold[node] = cut
        left[node] = grow(idx[go_left], depth + 1)
        right[node] = grow(idx[~go_left], depth + 1)
        return node

    grow(np.arange(len(y)), 0)
    return {
        "feature": np.asarray(feature, dtype=np.int32),
        "threshold": np.asarray(threshold),
        "left": np.asarray(left, dtype=np.int32),
        "right": np.asarray(right, dtype=np.int32),
        "leaf_class": np.asarray(leaf_class, dtype=np.int32),
    }


def _tree_predict(tree, Xh) -> np.ndarray:
    out = np.zeros(len(Xh), dtype=np.int64)

    def route(node, idx):
        if tree["feature"][node] < 0:
            out[idx] = tree["leaf_class"][node]
            return
        go_left = Xh[idx, tree["feature"][node]] <= tree["threshold"][node]
        if go_left.any():
            route(tree["left"][node], idx[go_left])
        if (~go_left).any():
            route(tree["right"][node], idx[~go_left])

    route(0, np.arange(len(Xh)))
    return out


def _train_rf(X, y, C, hyper, rng):
    Xh = hash_features(X, int(hyper["hash_dim"]))
    N = len(y)
    arrays = {}
    n_trees = int(hyper["n_trees"])
    for t in range(n_trees):
        boot = rng.integers(0, N, size=N)
        tree = _build_tree(Xh[boot], y[boot], C, rng,
                           int(hyper["max_depth"]), int(hyper["min_samples_split"]))
        for key, arr in tree.items():
            arrays[f"tree{t}_{key}"] = arr
    arrays["n_trees"] = np.asarray([n_trees], dtype=np.int64)
    return arrays, []


_TRAINERS = {"LR": _train_lr, "NB": _train_nb, "SVM": _train_svm, "RF": _train_rf}


def train_baseline(kind: str, X, y, hyper: dict | None = None,
                   seed: int = 0, label_space=None) -> BaselineModel:
    """Train one of the four traditional models on sparse count vectors.

    label_space fixes the class order (tie-breaks, score columns); when
    omitted the distinct labels are used in first-seen order.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    labels = list(y)
    if len(set(labels)) < 2:
        raise ValueError("training data must contain at least 2 classes")
    if label_space is None:
        label_space = tuple(dict.fromkeys(labels))
    else:
        label_space = tuple(lbl for lbl in label_space if lbl in set(labels))
    merged = dict(DEFAULT_HYPER[kind])
    merged.update(hyper or {})
    X = _as_csr(X)
    y_idx = _encode_labels(labels, label_space)
    rng = check_random_state(seed)
    arrays, trace = _TRAINERS[kind](X, y_idx, len(label_space), merged, rng)
    return BaselineModel(kind=kind, label_space=label_space,
                         n_features=X.shape[1], hyper=merged, arrays=arrays,
                         loss_trace=trace)


def _scores(model: BaselineModel, X: sparse.csr_matrix) -> np.ndarray:
    if model.kind == "LR":
        return X @ model.arrays["W"] + model.arrays["b"]
    if model.kind == "NB":
        return model.arrays["log_prior"] + X @ model.arrays["log_lik"].T
    if model.kind == "SVM":
        return X @ model.arrays["W"].T + model.arrays["b"]
    raise ValueError(f"no decision scores for kind {model.kind!r}")


def predict_baseline(model: BaselineModel, X) -> list[str]:
    """Argmax class per post; ties break toward the earlier label."""
    X = _as_csr(X, model.n_features)
    if X.shape[1] != model.n_features:
        raise ValueError(
            f"feature dimension {X.shape[1]} does not match the model's "
            f"{model.n_features}")
    if model.kind == "RF":
        Xh = hash_features(X, int(model.hyper["hash_dim"]))
        n_trees = int(model.arrays["n_trees"][0])
        votes = np.zeros((X.shape[0], len(model.label_space)), dtype=np.int64)
        for t in range(n_trees):
            tree = {key: model.arrays[f"tree{t}_{key}"]
                    for key in ("feature", "threshold", "left", "right", "leaf_class")}
            pred = _tree_predict(tree, Xh)
            votes[np.arange(X.shape[0]), pred] += 1
        idx = votes.argmax(axis=1)
    else:
        idx = _scores(model, X).argmax(axis=1)
    return [model.label_space[i] for i in idx]


# ---------------------------------------------------------------------------
# estimator wrapper: vectorizer + model, leak-free per fold
# ---------------------------------------------------------------------------

class TextBaseline(BaseEstimator):
    """fit/predict over Post lists: builds the bag representation from the
    training posts only, then trains the requested traditional model."""

    def __init__(self, kind: str = "LR", representation: str = "word",
                 n_min: int = 2, n_max: int = 4, hyper: dict | None = None,
                 seed: int = 0):
        self.kind = kind
        self.representation = representation
        self.n_min = n_min
        self.n_max = n_max
        self.hyper = hyper
        self.seed = seed

    def fit(self, posts, y=None):
        if self.representation == "word":
            self.vectorizer_ = WordUnigramVectorizer()
        elif self.representation == "char":
            self.vectorizer_ = CharNgramVectorizer(self.n_min, self.n_max)
        else:
            raise ValueError(
                f"unknown representation {self.representation!r}; "
                "expected 'word' or 'char'")
        X = self.vectorizer_.fit(posts).transform_csr(posts)
        labels = [p.label for p in posts] if y is None else list(y)
        space = LABEL_SPACES.get(posts[0].platform) if posts else None
        self.model_ = train_baseline(self.kind, X, labels, self.hyper,
                                     self.seed, label_space=space)
        return self

    def predict(self, posts) -> list[str]:
        check_fitted(self, "model_")
        X = self.vectorizer_.transform_csr(posts)
        return predict_baseline(self.model_, X)
