"""Conditional-probability statistics against brute-force enumeration."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbdetect import lexstats as lx
from cbdetect.corpus import LabeledCorpus, Post


def build_corpus(specs, platform="Formspring"):
    """specs: list of (tokens, label, anonymous)."""
    posts = [
        Post(id=f"p{i}", platform=platform, tokens=tuple(tokens), label=label,
             anonymous=None if platform == "Twitter" else anon)
        for i, (tokens, label, anon) in enumerate(specs)
    ]
    space = ("racism", "sexism", "none") if platform == "Twitter" else ("bully", "none")
    return LabeledCorpus.from_posts(posts, space)


def test_load_lexicon(tmp_path):
    f = tmp_path / "lex.txt"
    f.write_text("damn\nhell\n", encoding="utf-8")
    assert lx.load_lexicon(f) == {"damn", "hell"}


def test_load_lexicon_dedup(tmp_path):
    f = tmp_path / "lex.txt"
    f.write_text("damn\nDAMN\ndamn\n", encoding="utf-8")
    assert lx.load_lexicon(f) == {"damn"}


def test_load_lexicon_comments_only_error(tmp_path):
    f = tmp_path / "lex.txt"
    f.write_text("# nothing here\n# move along\n", encoding="utf-8")
    with pytest.raises(lx.LexiconError):
        lx.load_lexicon(f)


def test_default_lexicon_loads():
    lex = lx.default_lexicon()
    assert len(lex) >= 300
    assert "damn" in lex and "moron" in lex


def test_four_post_hand_case():
    # 1 bully that swears, 3 clean none posts -> brute-force enumeration
    corpus = build_corpus([
        (["you", "moron"], "bully", False),
        (["nice", "day"], "none", False),
        (["hello", "there"], "none", False),
        (["good", "morning"], "none", False),
    ])
    t = lx.conditional_stats(corpus, frozenset({"moron"}))
    assert t.p_b == pytest.approx(0.25)
    assert t.p_s_given_b == pytest.approx(1.0)
    assert t.p_b_given_s == pytest.approx(1.0)
    assert t.p_s == pytest.approx(0.25)


def test_twitter_anonymity_undefined():
    corpus = build_corpus([
        (["you", "moron"], "racism", None),
        (["fine", "tweet"], "none", None),
        (["another", "tweet"], "sexism", None),
    ], platform="Twitter")
    t = lx.conditional_stats(corpus, frozenset({"moron"}))
    assert t.p_a is None and t.p_b_given_a is None and t.p_a_given_b is None
    assert t.p_s_given_a is None and t.p_b_given_a_and_s is None
    assert t.p_b == pytest.approx(2 / 3)


def test_zero_count_condition_undefined():
    corpus = build_corpus([
        (["nice", "words"], "none", False),
        (["kind", "words"], "bully", True),
    ])
    t = lx.conditional_stats(corpus, frozenset({"moron"}))
    assert t.p_s == 0.0
    assert t.p_b_given_s is None  # nobody swears
    assert t.p_s_given_b == 0.0


def test_swearing_is_token_membership_not_substring():
    corpus = build_corpus([
        (["assassin"], "none", False),  # contains "ass" as substring only
        (["ass"], "none", False),
    ])
    t = lx.conditional_stats(corpus, frozenset({"ass"}))
    assert t.p_s == pytest.approx(0.5)


@st.composite
def random_corpus(draw):
    n = draw(st.integers(min_value=1, max_value=40))
    specs = []
    for _ in range(n):
        tokens = draw(st.lists(st.sampled_from(
            ["moron", "idiot", "nice", "day", "hello"]), min_size=1, max_size=5))
        label = draw(st.sampled_from(["bully", "none"]))
        anon = draw(st.booleans())
        specs.append((tokens, label, anon))
    return build_corpus(specs)


@given(random_corpus())
@settings(max_examples=60, deadline=None)
def test_bayes_consistency_on_random_corpora(corpus):
    t = lx.conditional_stats(corpus, frozenset({"moron", "idiot"}))
    if None not in (t.p_b_given_s, t.p_s, t.p_s_given_b, t.p_b):
        assert abs(t.p_b_given_s * t.p_s - t.p_s_given_b * t.p_b) <= 1e-9


@given(random_corpus())
@settings(max_examples=60, deadline=None)
def test_stats_match_enumeration_oracle(corpus):
    lexicon = frozenset({"moron", "idiot"})
    t = lx.conditional_stats(corpus, lexicon)
    posts = corpus.posts
    bully = [p.label != "none" for p in posts]
    swear = [any(tok in lexicon for tok in p.tokens) for p in posts]
    anon = [bool(p.anonymous) for p in posts]
    n = len(posts)

    def frac(pairs):
        hits = [b for cond, b in pairs if cond]
        return sum(hits) / len(hits) if hits else None

    assert t.p_b == pytest.approx(sum(bully) / n)
    assert t.p_s == pytest.approx(sum(swear) / n)
    expected_bs = frac(list(zip(swear, bully)))
    if expected_bs is None:
        assert t.p_b_given_s is None
    else:
        assert t.p_b_given_s == pytest.approx(expected_bs)
    expected_ba = frac(list(zip(anon, bully)))
    if expected_ba is None:
        assert t.p_b_given_a is None
    else:
        assert t.p_b_given_a == pytest.approx(expected_ba)
    expected_bas = frac([(a and s, b) for a, s, b in zip(anon, swear, bully)])
    if expected_bas is None:
        assert t.p_b_given_a_and_s is None
    else:
        assert t.p_b_given_a_and_s == pytest.approx(expected_bas)


def test_render_row_dashes_for_undefined():
    corpus = build_corpus(
        [(["plain", "tweet"], "none", None)], platform="Twitter")
    t = lx.conditional_stats(corpus, frozenset({"moron"}))
    row = lx.render_stats_row("Twitter", t)
    cells = row.split("\t")
    assert cells[0] == "Twitter"
    assert cells[3] == "-"  # P(A)
    assert cells[1] == "0.00"  # P(B)
    assert len(cells) == 10


def test_planted_rates_recovered():
    # generator plants known swearing/bullying rates; stats must recover them
    rng = random.Random(0)
    specs = []
    for i in range(2000):
        bully = rng.random() < 0.10
        swears = rng.random() < (0.6 if bully else 0.1)
        tokens = ["moron" if swears else "nice", "words"]
        specs.append((tokens, "bully" if bully else "none", rng.random() < 0.5))
    corpus = build_corpus(specs)
    t = lx.conditional_stats(corpus, frozenset({"moron"}))
    assert t.p_b == pytest.approx(0.10, abs=0.03)
    assert t.p_s_given_b == pytest.approx(0.60, abs=0.08)
