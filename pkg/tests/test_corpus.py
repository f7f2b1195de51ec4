"""Corpus loading, preprocessing, folds, and oversampling."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbdetect import corpus as cp


def make_post(i, label, n_tokens=3, platform="Formspring", anonymous=False):
    tokens = tuple(f"w{i}_{j}" for j in range(n_tokens))
    anon = None if platform == "Twitter" else anonymous
    return cp.Post(id=f"p{i}", platform=platform, tokens=tokens,
                   label=label, anonymous=anon)


def make_corpus(labels, platform="Formspring", lengths=None):
    space = cp.LABEL_SPACES[platform]
    posts = [
        make_post(i, label, n_tokens=(lengths[i] if lengths else 3),
                  platform=platform)
        for i, label in enumerate(labels)
    ]
    return cp.LabeledCorpus.from_posts(posts, space)


# ---------------------------------------------------------------------------
# preprocess
# ---------------------------------------------------------------------------

def test_preprocess_moron():
    assert cp.preprocess("You ARE a Moron!!", {"you", "are", "a"}) == ["moron"]


def test_preprocess_lowercase_only():
    assert cp.preprocess("Hello", set()) == ["hello"]


def test_preprocess_all_stopwords():
    assert cp.preprocess("the the the", {"the"}) == []


def test_preprocess_order_preserved():
    assert cp.preprocess("Bad, worse; WORST!", set()) == ["bad", "worse", "worst"]


def test_preprocess_unicode_punctuation():
    assert cp.preprocess("“mad”—really…", set()) == ["mad", "really"]


def test_default_stopwords_cover_common_function_words():
    stops = cp.default_stopwords()
    assert {"you", "are", "a"} <= stops
    assert len(stops) >= 100


# ---------------------------------------------------------------------------
# percentile / truncate
# ---------------------------------------------------------------------------

def test_percentile_nearest_rank_1_to_20():
    # oracle: rank = ceil(0.95 * 20) = 19 -> 19th smallest of 1..20 = 19
    c = make_corpus(["bully"] * 10 + ["none"] * 10,
                    lengths=list(range(1, 21)))
    assert cp.compute_length_percentile(c, 95) == 19


def test_percentile_single_post():
    c = make_corpus(["bully", "none", "none"], lengths=[7, 7, 7])
    for p in (1, 50, 95, 100):
        assert cp.compute_length_percentile(c, p) == 7


def test_percentile_empty_corpus_error():
    c = cp.LabeledCorpus.from_posts([], ("bully", "none"))
    with pytest.raises(cp.CorpusError):
        cp.compute_length_percentile(c, 95)


def test_percentile_matches_sort_oracle():
    lengths = [3, 1, 4, 1, 5, 9, 2, 6, 5, 3]
    for p in (10, 25, 50, 75, 90, 95, 100):
        rank = math.ceil(p / 100 * len(lengths))
        assert cp.nearest_rank_percentile(lengths, p) == sorted(lengths)[rank - 1]


def test_truncate_long_post():
    c = make_corpus(["bully", "none"], lengths=[2846, 10])
    out = cp.truncate(c, 231)
    assert len(out.posts[0].tokens) == 231
    assert out.posts[0].tokens == c.posts[0].tokens[:231]
    assert out.posts[1].tokens == c.posts[1].tokens  # under limit: unchanged
    assert out.max_length == 231


def test_truncate_limit_one():
    c = make_corpus(["bully", "none"], lengths=[5, 3])
    out = cp.truncate(c, 1)
    assert all(len(p.tokens) == 1 for p in out.posts)
    assert [p.tokens[0] for p in out.posts] == [p.tokens[0] for p in c.posts]


@given(st.lists(st.integers(min_value=1, max_value=40), min_size=1, max_size=30),
       st.integers(min_value=1, max_value=40))
@settings(max_examples=50, deadline=None)
def test_truncate_idempotent(lengths, limit):
    labels = ["bully" if i % 2 else "none" for i in range(len(lengths))]
    c = make_corpus(labels, lengths=lengths)
    once = cp.truncate(c, limit)
    twice = cp.truncate(once, limit)
    assert once == twice


@given(st.lists(st.integers(min_value=1, max_value=300), min_size=1, max_size=60))
@settings(max_examples=50, deadline=None)
def test_at_most_five_percent_exceed_length_at_95(lengths):
    labels = ["bully" if i % 2 else "none" for i in range(len(lengths))]
    c = make_corpus(labels, lengths=lengths)
    over = sum(len(p.tokens) > c.length_at_95 for p in c.posts)
    assert over <= 0.05 * len(c.posts)


# ---------------------------------------------------------------------------
# vocabulary
# ---------------------------------------------------------------------------

def corpus_of_token_lists(token_lists):
    posts = [
        cp.Post(id=f"p{i}", platform="Formspring", tokens=tuple(toks),
                label="none", anonymous=False)
        for i, toks in enumerate(token_lists)
    ]
    return cp.LabeledCorpus.from_posts(posts, ("bully", "none"))


def test_vocabulary_frequency_order():
    vocab = cp.build_vocabulary(corpus_of_token_lists([["a", "b"], ["b"]]))
    assert len(vocab) == 4
    assert vocab.index_to_word == (cp.PAD_TOKEN, cp.OOV_TOKEN, "b", "a")


def test_vocabulary_min_count_filters():
    vocab = cp.build_vocabulary(corpus_of_token_lists([["a", "b"], ["b"]]), min_count=2)
    assert vocab.index_to_word == (cp.PAD_TOKEN, cp.OOV_TOKEN, "b")


def test_vocabulary_empty_corpus():
    c = cp.LabeledCorpus.from_posts([], ("bully", "none"))
    vocab = cp.build_vocabulary(c)
    assert len(vocab) == 2


def test_vocabulary_alphabetical_tiebreak_and_determinism():
    c1 = corpus_of_token_lists([["zeta", "alpha"], ["beta", "gamma"]])
    c2 = corpus_of_token_lists([["zeta", "alpha"], ["beta", "gamma"]])
    v1, v2 = cp.build_vocabulary(c1), cp.build_vocabulary(c2)
    assert v1.word_to_index == v2.word_to_index
    assert v1.index_to_word[2:] == ("alpha", "beta", "gamma", "zeta")


def test_vocabulary_encode_pads_and_truncates():
    vocab = cp.build_vocabulary(corpus_of_token_lists([["a", "b", "c"]]))
    ids, length = vocab.encode(["a", "unknown", "b"], max_len=5)
    assert length == 3
    assert ids[1] == vocab.oov_index
    assert list(ids[3:]) == [vocab.pad_index, vocab.pad_index]
    ids, length = vocab.encode(["a"] * 10, max_len=4)
    assert length == 4 and len(ids) == 4
    ids, length = vocab.encode([], max_len=3)
    assert length == 1 and ids[0] == vocab.oov_index


# ---------------------------------------------------------------------------
# stratified folds
# ---------------------------------------------------------------------------

def test_folds_exact_divisibility():
    c = make_corpus(["bully"] * 5 + ["none"] * 5)
    split = cp.stratified_folds(c, k=5, seed=0)
    for fold in range(5):
        _, test = cp.fold_posts(c, split, fold)
        labels = [p.label for p in test]
        assert labels.count("bully") == 1 and labels.count("none") == 1


def test_folds_deterministic():
    c = make_corpus(["bully"] * 7 + ["none"] * 13)
    a = cp.stratified_folds(c, k=5, seed=42)
    b = cp.stratified_folds(c, k=5, seed=42)
    assert a.assignments == b.assignments


def test_folds_round_robin_imbalance_bound():
    c = make_corpus(["bully"] * 7 + ["none"] * 10)
    split = cp.stratified_folds(c, k=5, seed=1)
    bully_ids = {p.id for p in c.posts if p.label == "bully"}
    sizes = [len(split.test_ids(f) & bully_ids) for f in range(5)]
    assert set(sizes) <= {1, 2}
    assert max(sizes) - min(sizes) <= 1


def test_folds_small_class_error_names_class():
    c = make_corpus(["bully"] * 3 + ["none"] * 10)
    with pytest.raises(cp.CorpusError, match="bully"):
        cp.stratified_folds(c, k=5, seed=0)


def test_folds_partition_corpus():
    c = make_corpus(["bully"] * 6 + ["none"] * 11)
    split = cp.stratified_folds(c, k=5, seed=7)
    all_ids = [pid for f in range(5) for pid in split.test_ids(f)]
    assert sorted(all_ids) == sorted(p.id for p in c.posts)


# ---------------------------------------------------------------------------
# oversampling
# ---------------------------------------------------------------------------

def test_oversample_multiplicity_825():
    posts = ([make_post(i, "bully") for i in range(825)]
             + [make_post(10000 + i, "none") for i in range(11175)])
    out = cp.oversample(posts, {"bully"}, rate=3, seed=0)
    assert sum(p.label == "bully" for p in out) == 2475
    assert sum(p.label == "none" for p in out) == 11175


def test_oversample_rate_one_is_permutation():
    posts = [make_post(i, "bully" if i % 3 == 0 else "none") for i in range(30)]
    out = cp.oversample(posts, {"bully"}, rate=1, seed=5)
    assert sorted(p.id for p in out) == sorted(p.id for p in posts)


def test_oversample_twitter_both_minorities():
    posts = ([make_post(i, "racism", platform="Twitter") for i in range(4)]
             + [make_post(10 + i, "sexism", platform="Twitter") for i in range(6)]
             + [make_post(100 + i, "none", platform="Twitter") for i in range(20)])
    out = cp.oversample(posts, {"racism", "sexism"}, rate=3, seed=0)
    from collections import Counter
    counts = Counter(p.label for p in out)
    assert counts == {"racism": 12, "sexism": 18, "none": 20}


def test_oversample_rate_zero_error():
    with pytest.raises(ValueError):
        cp.oversample([], {"bully"}, rate=0)


def test_oversample_deterministic():
    posts = [make_post(i, "bully" if i % 4 == 0 else "none") for i in range(20)]
    a = cp.oversample(posts, {"bully"}, rate=3, seed=9)
    b = cp.oversample(posts, {"bully"}, rate=3, seed=9)
    assert [p.id for p in a] == [p.id for p in b]


def test_oversample_leaves_test_fold_untouched():
    c = make_corpus(["bully"] * 6 + ["none"] * 14)
    split = cp.stratified_folds(c, k=5, seed=3)
    train, test = cp.fold_posts(c, split, 0)
    before = [(p.id, p.tokens) for p in test]
    cp.oversample(train, {"bully"}, rate=3, seed=0)
    assert [(p.id, p.tokens) for p in test] == before
    assert not {p.id for p in test} & {p.id for p in train}


# ---------------------------------------------------------------------------
# canonical loading
# ---------------------------------------------------------------------------

def write_canonical_file(tmp_path, rows, name="corpus.tsv"):
    path = tmp_path / name
    path.write_text("".join(r + "\n" for r in rows), encoding="utf-8")
    return path


def test_load_dataset_roundtrip(tmp_path):
    rows = [
        "1\tFormspring\tbully\t1\tYou are a MORON loser",
        "2\tFormspring\tnone\t0\tHave a nice day friend",
        "3\tFormspring\tnone\t1\tthe and of",  # empty after stopwords: dropped
    ]
    path = write_canonical_file(tmp_path, rows)
    c = cp.load_dataset("Formspring", path)
    assert len(c) == 2
    assert c.label_space == ("bully", "none")
    assert c.posts[0].tokens == ("moron", "loser")
    assert c.posts[0].anonymous is True
    assert c.posts[1].anonymous is False
    assert c.vocabulary_size == 5
    assert c.vocabulary_size_with_stopwords > c.vocabulary_size


def test_load_dataset_empty_file(tmp_path):
    path = write_canonical_file(tmp_path, [])
    c = cp.load_dataset("Formspring", path)
    assert len(c) == 0 and c.length_at_95 == 0


def test_load_dataset_malformed_row_names_line(tmp_path):
    rows = ["1\tFormspring\tbully\t1\tfine text", "2\tFormspring\tbully"]
    path = write_canonical_file(tmp_path, rows)
    with pytest.raises(cp.CorpusError, match=":2"):
        cp.load_dataset("Formspring", path)


def test_load_dataset_unknown_label_lists_accepted(tmp_path):
    rows = ["1\tTwitter\tattack\t-\tsome tweet text"]
    path = write_canonical_file(tmp_path, rows)
    with pytest.raises(cp.CorpusError, match="racism, sexism, none"):
        cp.load_dataset("Twitter", path)


def test_load_dataset_twitter_anonymity_rule(tmp_path):
    path = write_canonical_file(tmp_path, ["1\tTwitter\tnone\t1\thello world tweet"])
    with pytest.raises(cp.CorpusError):
        cp.load_dataset("Twitter", path)


def test_post_invariant_twitter():
    with pytest.raises(cp.CorpusError):
        cp.Post(id="x", platform="Twitter", tokens=("a",), label="none",
                anonymous=True)
    with pytest.raises(cp.CorpusError):
        cp.Post(id="x", platform="Wikipedia", tokens=("a",), label="none",
                anonymous=None)


# ---------------------------------------------------------------------------
# ingestion adapters
# ---------------------------------------------------------------------------

def test_ingest_formspring_csv(tmp_path):
    raw = tmp_path / "formspring.csv"
    raw.write_text(
        "userid,asker,ques,ans,ans1,ans2,ans3\n"
        "u1,,How are you?,Fine thanks,No,No,No\n"
        "u2,SomeUser,Why so DUMB?,go away,Yes,Yes,No\n"
        "u3,anonymous,hey there,hi,Yes,No,No\n",
        encoding="utf-8")
    out = tmp_path / "canonical.tsv"
    n = cp.ingest("Formspring", raw, out)
    assert n == 3
    c = cp.load_dataset("Formspring", out)
    by_id = {p.id: p for p in c.posts}
    assert by_id["formspring-1"].label == "none"
    assert by_id["formspring-1"].anonymous is True  # empty asker
    assert by_id["formspring-2"].label == "bully"  # 2 of 3 yes votes
    assert by_id["formspring-2"].anonymous is False
    assert by_id["formspring-3"].label == "none"  # only 1 yes vote
    assert by_id["formspring-3"].anonymous is True
    # question and answer are concatenated, question first
    assert by_id["formspring-2"].tokens == ("dumb", "go", "away")


def test_ingest_formspring_xml(tmp_path):
    raw = tmp_path / "formspring.xml"
    raw.write_text(
        "<DATA><FORMSPRINGID>"
        "<POST><TEXT>Q: you stink A: whatever loser</TEXT>"
        "<ASKER>anonymous</ASKER>"
        "<LABELDATA><ANSWER>Yes</ANSWER></LABELDATA>"
        "<LABELDATA><ANSWER>Yes</ANSWER></LABELDATA>"
        "<LABELDATA><ANSWER>No</ANSWER></LABELDATA></POST>"
        "<POST><TEXT>Q: hi A: hello friend</TEXT>"
        "<ASKER>buddy42</ASKER>"
        "<LABELDATA><ANSWER>No</ANSWER></LABELDATA>"
        "<LABELDATA><ANSWER>No</ANSWER></LABELDATA>"
        "<LABELDATA><ANSWER>No</ANSWER></LABELDATA></POST>"
        "</FORMSPRINGID></DATA>",
        encoding="utf-8")
    out = tmp_path / "canonical.tsv"
    assert cp.ingest("Formspring", raw, out) == 2
    c = cp.load_dataset("Formspring", out)
    labels = {p.id: (p.label, p.anonymous) for p in c.posts}
    assert labels["formspring-1"] == ("bully", True)
    assert labels["formspring-2"] == ("none", False)


def test_ingest_twitter_csv(tmp_path):
    raw = tmp_path / "tweets.csv"
    raw.write_text(
        "tweet_id,text,label\n"
        "11,these people are awful honestly,racist\n"
        "12,\"women belong in, you know where\",sexism\n"
        "13,lovely weather today,neither\n",
        encoding="utf-8")
    out = tmp_path / "twitter.tsv"
    assert cp.ingest("Twitter", raw, out) == 3
    c = cp.load_dataset("Twitter", out)
    assert c.label_space == ("racism", "sexism", "none")
    assert [p.label for p in c.posts] == ["racism", "sexism", "none"]
    assert all(p.anonymous is None for p in c.posts)


def test_ingest_twitter_unknown_label(tmp_path):
    raw = tmp_path / "tweets.csv"
    raw.write_text("text,label\nhello there,spammy\n", encoding="utf-8")
    with pytest.raises(cp.CorpusError, match="row 2"):
        cp.ingest_twitter_csv(raw)


def test_ingest_wikipedia_with_annotations(tmp_path):
    comments = tmp_path / "comments.tsv"
    comments.write_text(
        "rev_id\tcomment\tlogged_in\n"
        "100\tyou are NEWLINE_TOKEN a complete moron\tFalse\n"
        "200\tthanks for the helpful edit\tTrue\n",
        encoding="utf-8")
    annotations = tmp_path / "annotations.tsv"
    annotations.write_text(
        "rev_id\tworker_id\tattack\n"
        "100\t1\t1.0\n100\t2\t1.0\n100\t3\t0.0\n"
        "200\t1\t0.0\n200\t2\t0.0\n200\t3\t1.0\n",
        encoding="utf-8")
    out = tmp_path / "wiki.tsv"
    assert cp.ingest("Wikipedia", comments, out, annotations_path=annotations) == 2
    c = cp.load_dataset("Wikipedia", out)
    by_id = {p.id: p for p in c.posts}
    assert by_id["wikipedia-100"].label == "bully"  # 2/3 > 0.5
    assert by_id["wikipedia-100"].anonymous is True
    assert by_id["wikipedia-200"].label == "none"  # 1/3 <= 0.5
    assert by_id["wikipedia-200"].anonymous is False
    assert "newline_token" not in by_id["wikipedia-100"].tokens


def test_subsample_stratified():
    c = make_corpus(["bully"] * 20 + ["none"] * 180)
    sub = cp.subsample(c, 50, seed=0)
    counts = sub.class_counts()
    assert 40 <= len(sub) <= 55
    assert counts["bully"] >= 3  # minority preserved roughly proportionally
