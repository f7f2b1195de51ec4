"""Swearing/anonymity/bullying conditional probabilities.

A post swears when any of its (preprocessed) tokens is in the lexicon; it
is bullying when its label is anything but "none". Probabilities are plain
empirical fractions; a conditional whose condition never occurs is left
undefined, as are all anonymity-derived entries on corpora without
anonymity flags.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from importlib import resources

from .corpus import LabeledCorpus, read_wordlist

STAT_COLUMNS = (
    "p_b", "p_s", "p_a", "p_b_given_s", "p_s_given_b",
    "p_b_given_a", "p_a_given_b", "p_s_given_a", "p_b_given_a_and_s",
)


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class StatsTable:
    """Table row of bullying (B) / swearing (S) / anonymity (A) probabilities;
    None marks an undefined entry."""

    p_b: float | None
    p_s: float | None
    p_a: float | None
    p_b_given_s: float | None
    p_s_given_b: float | None
    p_b_given_a: float | None
    p_a_given_b: float | None
    p_s_given_a: float | None
    p_b_given_a_and_s: float | None

    def as_row(self) -> list[float | None]:
        return [getattr(self, name) for name in STAT_COLUMNS]

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{f.name} = {v} outside [0, 1]")


def load_lexicon(path) -> frozenset[str]:
    """Load a one-word-per-line lexicon; empty lexicons are an error."""
    words = frozenset(read_wordlist(path))
    if not words:
        raise LexiconError(f"lexicon file {path} contains no words")
    return words


def default_lexicon() -> frozenset[str]:
    ref = resources.files("cbdetect.data").joinpath("profanity.txt")
    with resources.as_file(ref) as path:
        return load_lexicon(path)


def _ratio(num: int, den: int) -> float | None:
    return None if den == 0 else num / den


def conditional_stats(corpus: LabeledCorpus, lexicon: frozenset[str]) -> StatsTable:
    n = len(corpus.posts)
    has_anonymity = any(p.anonymous is not None for p in corpus.posts)
    n_b = n_s = n_a = n_bs = n_ab = n_as = n_abs = 0
    for post in corpus.posts:
        bully = post.label != "none"
        swears = any(tok in lexicon for tok in post.tokens)
        anon = bool(post.anonymous)
        n_b += bully
        n_s += swears
        n_bs += bully and swears
        if has_anonymity:
            n_a += anon
            n_ab += anon and bully
            n_as += anon and swears
            n_abs += anon and bully and swears
    table = StatsTable(
        p_b=_ratio(n_b, n),
        p_s=_ratio(n_s, n),
        p_a=_ratio(n_a, n) if has_anonymity else None,
        p_b_given_s=_ratio(n_bs, n_s),
        p_s_given_b=_ratio(n_bs, n_b),
        p_b_given_a=_ratio(n_ab, n_a) if has_anonymity else None,
        p_a_given_b=_ratio(n_ab, n_b) if has_anonymity else None,
        p_s_given_a=_ratio(n_as, n_a) if has_anonymity else None,
        p_b_given_a_and_s=_ratio(n_abs, n_as) if has_anonymity else None,
    )
    _check_bayes(table)
    return table


def _check_bayes(t: StatsTable, tol: float = 1e-9):
    # P(B|S) P(S) = P(S|B) P(B) must hold on every corpus
    if None not in (t.p_b_given_s, t.p_s, t.p_s_given_b, t.p_b):
        lhs = t.p_b_given_s * t.p_s
        rhs = t.p_s_given_b * t.p_b
        if abs(lhs - rhs) > tol:
            raise AssertionError(
                f"Bayes consistency violated: P(B|S)P(S)={lhs} vs P(S|B)P(B)={rhs}")


def render_stats_row(dataset: str, table: StatsTable) -> str:
    cells = [dataset]
    for value in table.as_row():
        cells.append("-" if value is None else f"{value:.2f}")
    return "\t".join(cells)


def stats_header() -> str:
    pretty = ("P(B)", "P(S)", "P(A)", "P(B|S)", "P(S|B)",
              "P(B|A)", "P(A|B)", "P(S|A)", "P(B|A&S)")
    return "\t".join(("Dataset", *pretty))
