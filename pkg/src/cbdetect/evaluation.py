"""Confusion-matrix metrics, the k-fold harness, and table rendering.

cross_validate drives any fit/predict estimator through stratified folds:
training folds may be oversampled, test folds are never touched, and all
per-fold randomness fans out deterministically from one root seed. Fold
metrics are aggregated both as the mean of per-fold values (reported) and
as metrics of the pooled confusion matrix (recorded alongside).
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .base import spawn_seed
from .corpus import (LabeledCorpus, fold_posts, minority_classes, oversample,
                     stratified_folds)


class FoldError(RuntimeError):
    pass


@dataclass(frozen=True)
class Metrics:
    label_space: tuple[str, ...]
    precision: dict[str, float]
    recall: dict[str, float]
    f1: dict[str, float]
    support: dict[str, int]
    accuracy: float
    zero_division: frozenset[str] = frozenset()

    def for_class(self, label: str) -> tuple[float, float, float]:
        return self.precision[label], self.recall[label], self.f1[label]


@dataclass(frozen=True)
class FoldReport:
    per_fold: tuple[Metrics, ...]
    mean: Metrics
    pooled: Metrics
    fingerprint: str
    seed: int

    @property
    def k(self) -> int:
        return len(self.per_fold)


def confusion(truth, pred, label_space) -> np.ndarray:
    """Count matrix with rows = true class, columns = predicted class."""
    truth, pred = list(truth), list(pred)
    if len(truth) != len(pred):
        raise ValueError(f"{len(truth)} truths vs {len(pred)} predictions")
    index = {label: i for i, label in enumerate(label_space)}
    C = np.zeros((len(label_space), len(label_space)), dtype=np.int64)
    for t, p in zip(truth, pred):
        if t not in index:
            raise ValueError(f"unknown true label {t!r}")
        if p not in index:
            raise ValueError(f"unknown predicted label {p!r}")
        C[index[t], index[p]] += 1
    return C


def metrics_from_confusion(C: np.ndarray, label_space) -> Metrics:
    """One-vs-rest precision/recall/F1 per class; zero denominators yield
    0.0 and set the class's zero-division flag."""
    C = np.asarray(C)
    if (C < 0).any():
        raise ValueError("confusion matrix must be non-negative")
    label_space = tuple(label_space)
    precision, recall, f1, support = {}, {}, {}, {}
    flagged = set()
    for i, label in enumerate(label_space):
        tp = float(C[i, i])
        predicted = float(C[:, i].sum())
        actual = float(C[i, :].sum())
        p = tp / predicted if predicted > 0 else 0.0
        r = tp / actual if actual > 0 else 0.0
        f = 2 * p * r / (p + r) if (p + r) > 0 else 0.0
        if predicted == 0 or actual == 0 or (p + r) == 0:
            flagged.add(label)
        precision[label], recall[label], f1[label] = p, r, f
        support[label] = int(actual)
    total = float(C.sum())
    accuracy = float(np.trace(C)) / total if total > 0 else 0.0
    return Metrics(label_space=label_space, precision=precision, recall=recall,
                   f1=f1, support=support, accuracy=accuracy,
                   zero_division=frozenset(flagged))


def mean_metrics(metrics_list) -> Metrics:
    label_space = metrics_list[0].label_space
    def avg(getter):
        return {
            label: float(np.mean([getter(m)[label] for m in metrics_list]))
            for label in label_space
        }
    return Metrics(
        label_space=label_space,
        precision=avg(lambda m: m.precision),
        recall=avg(lambda m: m.recall),
        f1=avg(lambda m: m.f1),
        support={label: int(sum(m.support[label] for m in metrics_list))
                 for label in label_space},
        accuracy=float(np.mean([m.accuracy for m in metrics_list])),
        zero_division=frozenset().union(*(m.zero_division for m in metrics_list)),
    )


def fingerprint(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, default=repr).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _run_fold(args):
    (corpus, split, fold, estimator, oversample_rate, targets, seed) = args
    train, test = fold_posts(corpus, split, fold)
    if oversample_rate > 1:
        train = oversample(train, targets, oversample_rate,
                           seed=spawn_seed(seed, fold, 7))
    est = estimator.clone()
    if "seed" in est.get_params():
        est.set_params(seed=spawn_seed(seed, fold))
    try:
        est.fit(train)
        pred = est.predict(test)
    except Exception as exc:
        raise FoldError(f"fold {fold}: {exc}") from exc
    C = confusion([p.label for p in test], pred, corpus.label_space)
    return C


def cross_validate(corpus: LabeledCorpus, estimator, k: int = 5,
                   oversample_rate: int = 1, target_classes=None,
                   seed: int = 0, jobs: int = 1) -> FoldReport:
    """Train on k-1 folds (optionally oversampled), test on the held-out
    fold, and aggregate. Oversampling never touches test folds."""
    split = stratified_folds(corpus, k, seed)
    targets = (set(target_classes) if target_classes is not None
               else minority_classes(corpus.label_space))
    fold_args = [
        (corpus, split, fold, estimator, oversample_rate, targets, seed)
        for fold in range(k)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            confusions = list(pool.map(_run_fold, fold_args))
    else:
        confusions = [_run_fold(a) for a in fold_args]
    per_fold = tuple(metrics_from_confusion(C, corpus.label_space)
                     for C in confusions)
    pooled = metrics_from_confusion(np.sum(confusions, axis=0),
                                    corpus.label_space)
    fp = fingerprint({
        "estimator": estimator.get_params(), "k": k, "seed": seed,
        "oversample_rate": oversample_rate, "targets": sorted(targets),
        "n_posts": len(corpus.posts), "label_space": corpus.label_space,
    })
    return FoldReport(per_fold=per_fold, mean=mean_metrics(list(per_fold)),
                      pooled=pooled, fingerprint=fp, seed=seed)


# ---------------------------------------------------------------------------
# table rendering
# ---------------------------------------------------------------------------

def format_cell(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, str):
        return value
    return f"{float(value):.2f}"


def render_tsv(headers, rows) -> str:
    lines = ["\t".join(str(h) for h in headers)]
    for row in rows:
        lines.append("\t".join(format_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def render_aligned(headers, rows) -> str:
    cells = [[str(h) for h in headers]] + [
        [format_cell(v) for v in row] for row in rows]
    widths = [max(len(r[c]) for r in cells) for c in range(len(headers))]
    lines = []
    for r_i, row in enumerate(cells):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
        if r_i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_tables(headers, rows) -> str:
    """Both renderings of one table: tab-separated then aligned text."""
    return render_tsv(headers, rows) + "\n" + render_aligned(headers, rows)


def parse_tsv(text: str) -> tuple[list[str], list[list[str]]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    headers = lines[0].split("\t")
    return headers, [ln.split("\t") for ln in lines[1:]]
