"""Metrics against enumeration oracles and the cross-validation harness."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbdetect import evaluation as ev
from cbdetect.base import BaseEstimator
from cbdetect.corpus import LabeledCorpus, Post


def make_corpus(labels, platform="Formspring"):
    posts = [
        Post(id=f"p{i}", platform=platform, tokens=(f"tok{i}", "word"),
             label=label, anonymous=False)
        for i, label in enumerate(labels)
    ]
    space = ("bully", "none")
    return LabeledCorpus.from_posts(posts, space)


# ---------------------------------------------------------------------------
# confusion + metrics
# ---------------------------------------------------------------------------

def test_confusion_perfect_diagonal():
    C = ev.confusion(["a", "b", "a"], ["a", "b", "a"], ("a", "b"))
    np.testing.assert_array_equal(C, [[2, 0], [0, 1]])


def test_confusion_single_column():
    C = ev.confusion(["a", "b", "b"], ["a", "a", "a"], ("a", "b"))
    np.testing.assert_array_equal(C, [[1, 0], [2, 0]])


def test_confusion_unknown_label():
    with pytest.raises(ValueError, match="unknown"):
        ev.confusion(["a"], ["z"], ("a", "b"))


def test_confusion_matches_hand_count():
    rng = np.random.default_rng(0)
    labels = ("x", "y", "z")
    truth = [labels[i] for i in rng.integers(0, 3, 20)]
    pred = [labels[i] for i in rng.integers(0, 3, 20)]
    C = ev.confusion(truth, pred, labels)
    for i, t in enumerate(labels):
        for j, p in enumerate(labels):
            manual = sum(1 for a, b in zip(truth, pred) if a == t and b == p)
            assert C[i, j] == manual


def test_f1_of_precision_084_recall_098():
    # F1 = 2*0.84*0.98/(0.84+0.98) = 0.904..., rounds to 0.90
    f1 = 2 * 0.84 * 0.98 / (0.84 + 0.98)
    assert round(f1, 2) == 0.90


def test_metrics_perfect():
    C = np.array([[5, 0], [0, 3]])
    m = ev.metrics_from_confusion(C, ("pos", "neg"))
    assert m.precision["pos"] == m.recall["pos"] == m.f1["pos"] == 1.0
    assert m.accuracy == 1.0
    assert m.support == {"pos": 5, "neg": 3}


def test_metrics_zero_tp_flagged():
    C = np.array([[0, 4], [2, 6]])  # nothing predicted correctly for class 0
    m = ev.metrics_from_confusion(C, ("pos", "neg"))
    assert m.precision["pos"] == m.recall["pos"] == m.f1["pos"] == 0.0
    assert "pos" in m.zero_division


def test_metrics_f1_symmetry():
    # F1 is symmetric in P and R: transpose swaps them, F1 unchanged
    C = np.array([[7, 3], [2, 8]])
    m = ev.metrics_from_confusion(C, ("a", "b"))
    mt = ev.metrics_from_confusion(C.T, ("a", "b"))
    assert m.precision["a"] == mt.recall["a"]
    assert m.f1["a"] == pytest.approx(mt.f1["a"])


@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)),
                min_size=1, max_size=60))
@settings(max_examples=80, deadline=None)
def test_metrics_match_enumeration_oracle(pairs):
    labels = ("a", "b", "c")
    truth = [labels[t] for t, _ in pairs]
    pred = [labels[p] for _, p in pairs]
    C = ev.confusion(truth, pred, labels)
    m = ev.metrics_from_confusion(C, labels)
    assert m.accuracy == pytest.approx(
        sum(t == p for t, p in zip(truth, pred)) / len(pairs))
    for label in labels:
        tp = sum(1 for t, p in zip(truth, pred) if t == p == label)
        fp = sum(1 for t, p in zip(truth, pred) if t != label and p == label)
        fn = sum(1 for t, p in zip(truth, pred) if t == label and p != label)
        p_ = tp / (tp + fp) if tp + fp else 0.0
        r_ = tp / (tp + fn) if tp + fn else 0.0
        f_ = 2 * p_ * r_ / (p_ + r_) if p_ + r_ else 0.0
        assert m.precision[label] == pytest.approx(p_)
        assert m.recall[label] == pytest.approx(r_)
        assert m.f1[label] == pytest.approx(f_)


# ---------------------------------------------------------------------------
# cross-validation
# ---------------------------------------------------------------------------

class MajorityStub(BaseEstimator):
    """Predicts the most frequent training label; ignores features."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def fit(self, posts, y=None):
        labels = [p.label for p in posts]
        self.majority_ = max(set(labels), key=labels.count)
        return self

    def predict(self, posts):
        return [self.majority_] * len(posts)


class ExplodingStub(BaseEstimator):
    def __init__(self, seed: int = 0):
        self.seed = seed

    def fit(self, posts, y=None):
        raise RuntimeError("boom")

    def predict(self, posts):
        return []


def test_majority_stub_closed_form():
    # 80/20 imbalance: accuracy 0.8, minority F1 = 0 in every fold
    corpus = make_corpus(["bully"] * 20 + ["none"] * 80)
    report = ev.cross_validate(corpus, MajorityStub(), k=5, seed=1)
    for fold in report.per_fold:
        assert fold.accuracy == pytest.approx(0.8)
        assert fold.f1["bully"] == 0.0
        assert "bully" in fold.zero_division
    assert report.mean.accuracy == pytest.approx(0.8)
    assert report.pooled.accuracy == pytest.approx(0.8)


def test_each_post_in_exactly_one_test_fold():
    corpus = make_corpus(["bully"] * 30 + ["none"] * 70)
    seen = []

    class Recorder(MajorityStub):
        def predict(self, posts):
            seen.extend(p.id for p in posts)
            return super().predict(posts)

    ev.cross_validate(corpus, Recorder(), k=5, seed=0)
    assert sorted(seen) == sorted(p.id for p in corpus.posts)


def test_cross_validate_deterministic():
    corpus = make_corpus(["bully"] * 10 + ["none"] * 40)
    a = ev.cross_validate(corpus, MajorityStub(), k=5, seed=3)
    b = ev.cross_validate(corpus, MajorityStub(), k=5, seed=3)
    assert a == b


def test_fold_error_annotated():
    corpus = make_corpus(["bully"] * 10 + ["none"] * 10)
    with pytest.raises(ev.FoldError, match="fold 0"):
        ev.cross_validate(corpus, ExplodingStub(), k=5, seed=0)


def test_oversampling_changes_training_only():
    corpus = make_corpus(["bully"] * 10 + ["none"] * 40)
    sizes = []

    class SizeRecorder(MajorityStub):
        def fit(self, posts, y=None):
            sizes.append(sum(p.label == "bully" for p in posts))
            return super().fit(posts, y)

    ev.cross_validate(corpus, SizeRecorder(), k=5, oversample_rate=3, seed=0)
    assert sizes == [24] * 5  # 8 bully posts per training split, tripled


def test_parallel_jobs_match_serial():
    corpus = make_corpus(["bully"] * 10 + ["none"] * 40)
    serial = ev.cross_validate(corpus, MajorityStub(), k=5, seed=2, jobs=1)
    parallel = ev.cross_validate(corpus, MajorityStub(), k=5, seed=2, jobs=2)
    assert serial == parallel


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def test_render_single_row():
    text = ev.render_tsv(["Dataset", "P", "R", "F1"],
                         [["F+", 0.9, 0.98, 0.904]])
    assert text == "Dataset\tP\tR\tF1\nF+\t0.90\t0.98\t0.90\n"


def test_render_missing_cell_dash():
    text = ev.render_tsv(["Dataset", "P(A)"], [["Twitter", None]])
    assert "Twitter\t-" in text


def test_render_table4_shape():
    headers = ["Dataset", "Label"] + [
        f"{m}-{e}" for m in ("P", "R", "F1") for e in ("Random", "Glove", "SSWE")]
    rows = [["F+", "bully"] + [0.84, 0.85, 0.90, 0.98, 0.97, 0.91, 0.90, 0.90, 0.91]]
    text = ev.render_tsv(headers, rows)
    parsed_headers, parsed_rows = ev.parse_tsv(text)
    assert len(parsed_headers) == 11  # 9 value columns + dataset + label
    assert parsed_rows[0][2:] == ["0.84", "0.85", "0.90", "0.98", "0.97",
                                  "0.91", "0.90", "0.90", "0.91"]


def test_render_lossless_to_two_decimals():
    rng = np.random.default_rng(5)
    values = rng.random(12)
    text = ev.render_tsv(["c"] * 12, [list(values)])
    _, rows = ev.parse_tsv(text)
    parsed = [float(v) for v in rows[0]]
    np.testing.assert_allclose(parsed, np.round(values, 2), atol=1e-9)


def test_render_aligned_has_separator():
    out = ev.render_aligned(["A", "BB"], [[1.0, None]])
    lines = out.splitlines()
    assert lines[1].startswith("-")
    assert lines[2].split() == ["1.00", "-"]
