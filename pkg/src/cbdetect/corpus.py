"""Corpus ingestion and preparation.

Raw platform exports are converted by the ``ingest_*`` adapters into one
canonical tab-separated format (id, platform, label, anonymous, raw_text);
:func:`load_dataset` reads that format, preprocesses the text, drops posts
that end up empty, and computes corpus statistics. Fold splitting and
minority-class oversampling live here too because they operate on posts.
"""

from __future__ import annotations

import csv
import logging
import math
import random
import unicodedata
from collections import Counter
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from xml.etree import ElementTree

import numpy as np

logger = logging.getLogger(__name__)

PLATFORMS = ("Formspring", "Twitter", "Wikipedia")
LABEL_SPACES = {
    "Formspring": ("bully", "none"),
    "Wikipedia": ("bully", "none"),
    "Twitter": ("racism", "sexism", "none"),
}

PAD_TOKEN = "<pad>"
OOV_TOKEN = "<oov>"


class CorpusError(ValueError):
    """Malformed input data; the message names the offending file and row."""


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Post:
    id: str
    platform: str
    tokens: tuple[str, ...]
    label: str
    anonymous: bool | None = None

    def __post_init__(self):
        if self.platform not in PLATFORMS:
            raise CorpusError(f"unknown platform {self.platform!r}")
        if (self.anonymous is None) != (self.platform == "Twitter"):
            raise CorpusError(
                f"post {self.id}: anonymity flag must be absent exactly for "
                f"Twitter posts (platform={self.platform})")


@dataclass(frozen=True)
class LabeledCorpus:
    posts: tuple[Post, ...]
    label_space: tuple[str, ...]
    length_at_95: int
    max_length: int
    vocabulary_size: int
    vocabulary_size_with_stopwords: int | None = None

    @classmethod
    def from_posts(cls, posts, label_space,
                   vocabulary_size_with_stopwords=None) -> "LabeledCorpus":
        posts = tuple(posts)
        label_space = tuple(label_space)
        seen_ids = set()
        for p in posts:
            if p.label not in label_space:
                raise CorpusError(
                    f"post {p.id}: label {p.label!r} not in {label_space}")
            if p.id in seen_ids:
                raise CorpusError(f"duplicate post id {p.id!r}")
            seen_ids.add(p.id)
            if not p.tokens:
                raise CorpusError(f"post {p.id}: empty posts must be dropped")
        lengths = [len(p.tokens) for p in posts]
        vocab = set()
        for p in posts:
            vocab.update(p.tokens)
        return cls(
            posts=posts,
            label_space=label_space,
            length_at_95=nearest_rank_percentile(lengths, 95) if posts else 0,
            max_length=max(lengths) if posts else 0,
            vocabulary_size=len(vocab),
            vocabulary_size_with_stopwords=vocabulary_size_with_stopwords,
        )

    def __len__(self):
        return len(self.posts)

    def labels(self) -> list[str]:
        return [p.label for p in self.posts]

    def class_counts(self) -> dict[str, int]:
        counts = Counter(p.label for p in self.posts)
        return {label: counts.get(label, 0) for label in self.label_space}


@dataclass(frozen=True)
class Vocabulary:
    word_to_index: dict[str, int]
    index_to_word: tuple[str, ...]
    pad_index: int = 0
    oov_index: int = 1

    def __len__(self):
        return len(self.index_to_word)

    def __contains__(self, word):
        return word in self.word_to_index

    def index(self, word: str) -> int:
        return self.word_to_index.get(word, self.oov_index)

    def word(self, index: int) -> str:
        return self.index_to_word[index]

    def encode(self, tokens, max_len: int) -> tuple[np.ndarray, int]:
        """Token ids right-padded/truncated to max_len, plus the real length.

        Empty token sequences encode as a single OOV token so downstream
        models always see at least one non-PAD position.
        """
        ids = [self.index(t) for t in tokens[:max_len]]
        if not ids:
            ids = [self.oov_index]
        length = len(ids)
        ids = ids + [self.pad_index] * (max_len - length)
        return np.asarray(ids, dtype=np.int64), length


@dataclass(frozen=True)
class FoldSplit:
    k: int
    assignments: dict[str, int]
    seed: int

    def test_ids(self, fold: int) -> set[str]:
        return {pid for pid, f in self.assignments.items() if f == fold}


# ---------------------------------------------------------------------------
# preprocessing
# ---------------------------------------------------------------------------

_STRIP_TABLE: dict[int, str] | None = None


def _strip_table() -> dict[int, str]:
    # every Unicode punctuation or symbol codepoint in the BMP maps to space
    global _STRIP_TABLE
    if _STRIP_TABLE is None:
        _STRIP_TABLE = {
            cp: " "
            for cp in range(0x10000)
            if unicodedata.category(chr(cp))[0] in ("P", "S")
        }
    return _STRIP_TABLE


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation to spaces, split on whitespace."""
    return text.lower().translate(_strip_table()).split()


def preprocess(text: str, stopwords: set[str] | frozenset[str] = frozenset()) -> list[str]:
    """Tokenize and remove stopwords; token order is preserved."""
    return [t for t in tokenize(text) if t not in stopwords]


def read_wordlist(path) -> list[str]:
    """One lowercase word per line; '#' starts a comment; blanks ignored."""
    words = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        word = line.split("#", 1)[0].strip().lower()
        if word:
            words.append(word)
    return words


def default_stopwords() -> frozenset[str]:
    ref = resources.files("cbdetect.data").joinpath("stopwords.txt")
    with resources.as_file(ref) as path:
        return frozenset(read_wordlist(path))


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

def nearest_rank_percentile(values, p: float) -> int:
    """Nearest-rank percentile: the ceil(p/100 * N)-th smallest value."""
    if not 0 < p <= 100:
        raise ValueError(f"percentile must be in (0, 100], got {p}")
    values = sorted(values)
    if not values:
        raise ValueError("cannot take a percentile of an empty sequence")
    rank = math.ceil(p / 100.0 * len(values))
    return values[rank - 1]


def compute_length_percentile(corpus: LabeledCorpus, p: float = 95) -> int:
    if not corpus.posts:
        raise CorpusError("cannot compute a length percentile of an empty corpus")
    return nearest_rank_percentile([len(post.tokens) for post in corpus.posts], p)


def truncate(corpus: LabeledCorpus, limit: int) -> LabeledCorpus:
    """Keep only the first `limit` tokens of each post; recompute statistics."""
    if limit < 1:
        raise ValueError(f"truncation limit must be >= 1, got {limit}")
    posts = tuple(
        p if len(p.tokens) <= limit else replace(p, tokens=p.tokens[:limit])
        for p in corpus.posts
    )
    return LabeledCorpus.from_posts(
        posts, corpus.label_space,
        vocabulary_size_with_stopwords=corpus.vocabulary_size_with_stopwords)


def build_vocabulary(corpus, min_count: int = 1) -> Vocabulary:
    """Index words with frequency >= min_count, most frequent first
    (alphabetical tie-break), after the PAD and OOV sentinels.

    Accepts a LabeledCorpus or any iterable of posts.
    """
    freq = Counter()
    for post in getattr(corpus, "posts", corpus):
        freq.update(post.tokens)
    kept = sorted((w for w, c in freq.items() if c >= min_count),
                  key=lambda w: (-freq[w], w))
    index_to_word = (PAD_TOKEN, OOV_TOKEN, *kept)
    return Vocabulary(
        word_to_index={w: i for i, w in enumerate(index_to_word)},
        index_to_word=index_to_word,
    )


# ---------------------------------------------------------------------------
# folds and oversampling
# ---------------------------------------------------------------------------

def stratified_folds(corpus: LabeledCorpus, k: int, seed: int) -> FoldSplit:
    """Per-class round-robin assignment after a seeded shuffle."""
    if k < 2:
        raise ValueError(f"fold count must be >= 2, got {k}")
    by_class: dict[str, list[str]] = {label: [] for label in corpus.label_space}
    for post in corpus.posts:
        by_class[post.label].append(post.id)
    rng = random.Random(seed)
    assignments: dict[str, int] = {}
    for label in corpus.label_space:
        ids = by_class[label]
        if 0 < len(ids) < k:
            raise CorpusError(
                f"class {label!r} has only {len(ids)} posts, fewer than k={k}")
        rng.shuffle(ids)
        for j, pid in enumerate(ids):
            assignments[pid] = j % k
    return FoldSplit(k=k, assignments=assignments, seed=seed)


def fold_posts(corpus: LabeledCorpus, split: FoldSplit, fold: int) -> tuple[list[Post], list[Post]]:
    """(train posts, test posts) for one fold, in corpus order."""
    train, test = [], []
    for post in corpus.posts:
        (test if split.assignments[post.id] == fold else train).append(post)
    return train, test


def oversample(training_posts, target_classes, rate: int, seed: int = 0) -> list[Post]:
    """Replicate posts of the target classes to total multiplicity `rate`,
    then shuffle with the seed. Applies to training folds only; callers must
    never pass test posts through here."""
    if rate < 1:
        raise ValueError(f"oversampling rate must be >= 1, got {rate}")
    target_classes = set(target_classes)
    out = []
    for post in training_posts:
        out.extend([post] * (rate if post.label in target_classes else 1))
    random.Random(seed).shuffle(out)
    return out


def minority_classes(label_space) -> set[str]:
    """The bullying-side classes: everything except 'none'."""
    return {label for label in label_space if label != "none"}


# ---------------------------------------------------------------------------
# canonical format
# ---------------------------------------------------------------------------

def _clean_field(text: str) -> str:
    return " ".join(str(text).split())


def format_canonical_row(post_id, platform, label, anonymous, raw_text) -> str:
    anon = "-" if anonymous is None else str(int(anonymous))
    return "\t".join(
        [_clean_field(post_id), platform, label, anon, _clean_field(raw_text)])


def write_canonical(rows, out_path) -> int:
    n = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(row + "\n")
            n += 1
    return n


def load_dataset(platform: str, path,
                 stopwords: set[str] | None = None) -> LabeledCorpus:
    """Read a canonical corpus file, preprocess, and compute statistics.

    Posts whose text is empty after preprocessing are dropped (the count is
    logged). The distinct-word count both before and after stopword removal
    is recorded on the corpus.
    """
    if platform not in PLATFORMS:
        raise CorpusError(
            f"unknown platform {platform!r}; expected one of {PLATFORMS}")
    if stopwords is None:
        stopwords = default_stopwords()
    label_space = LABEL_SPACES[platform]
    posts = []
    vocab_with_stop: set[str] = set()
    dropped = 0
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 5:
                raise CorpusError(
                    f"{path}:{lineno}: expected 5 tab-separated fields, "
                    f"got {len(fields)}")
            post_id, row_platform, label, anon_str, raw_text = fields
            if row_platform != platform:
                raise CorpusError(
                    f"{path}:{lineno}: platform {row_platform!r} does not "
                    f"match requested {platform!r}")
            if label not in label_space:
                raise CorpusError(
                    f"{path}:{lineno}: unknown label {label!r}; accepted "
                    f"labels for {platform}: {', '.join(label_space)}")
            if anon_str == "-":
                anonymous = None
            elif anon_str in ("0", "1"):
                anonymous = bool(int(anon_str))
            else:
                raise CorpusError(
                    f"{path}:{lineno}: anonymous flag must be 0, 1 or -, "
                    f"got {anon_str!r}")
            all_tokens = tokenize(raw_text)
            vocab_with_stop.update(all_tokens)
            tokens = tuple(t for t in all_tokens if t not in stopwords)
            if not tokens:
                dropped += 1
                continue
            try:
                posts.append(Post(id=post_id, platform=platform,
                                  tokens=tokens, label=label,
                                  anonymous=anonymous))
            except CorpusError as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from None
    if dropped:
        logger.info("dropped %d posts empty after preprocessing (%s)",
                    dropped, path)
    return LabeledCorpus.from_posts(
        posts, label_space,
        vocabulary_size_with_stopwords=len(vocab_with_stop))


# ---------------------------------------------------------------------------
# platform ingestion adapters
# ---------------------------------------------------------------------------

def _pick_column(fieldnames, candidates, path, kind):
    lowered = {name.lower().strip(): name for name in fieldnames if name}
    for cand in candidates:
        if cand in lowered:
            return lowered[cand]
    raise CorpusError(
        f"{path}: could not find a {kind} column; looked for any of "
        f"{', '.join(candidates)} in header {fieldnames}")


def _formspring_anonymous(asker: str | None) -> bool:
    if asker is None:
        return True
    asker = asker.strip().lower()
    return asker in ("", "-", "n/a") or "anon" in asker


def _is_yes(value: str | None) -> bool:
    return bool(value) and value.strip().lower().startswith("y")


def ingest_formspring_csv(path) -> list[str]:
    """Formspring Q&A export with three annotator verdict columns.

    A pair is bullying when at least two of the three annotators said yes.
    The asker field drives the anonymity flag (empty or anonymous-looking
    asker means anonymous).
    """
    path = Path(path)
    with open(path, encoding="utf-8", errors="replace", newline="") as fh:
        sample = fh.readline()
        delimiter = "\t" if sample.count("\t") >= sample.count(",") else ","
        fh.seek(0)
        reader = csv.DictReader(fh, delimiter=delimiter)
        if not reader.fieldnames:
            raise CorpusError(f"{path}: empty file")
        q_col = _pick_column(reader.fieldnames, ("ques", "question", "q"), path, "question")
        a_col = _pick_column(reader.fieldnames, ("ans", "answer", "a"), path, "answer")
        vote_cols = [
            name for name in reader.fieldnames
            if name and name.lower().strip() in
            ("ans1", "ans2", "ans3", "bully1", "bully2", "bully3")
        ]
        if len(vote_cols) < 3:
            raise CorpusError(
                f"{path}: expected three annotator columns (ans1..ans3 or "
                f"bully1..bully3), found {vote_cols}")
        asker_col = None
        for cand in ("asker", "askerid", "userid_asker"):
            if cand in {n.lower().strip() for n in reader.fieldnames if n}:
                asker_col = _pick_column(reader.fieldnames, (cand,), path, "asker")
                break
        rows = []
        for i, rec in enumerate(reader, start=2):
            try:
                question = rec.get(q_col) or ""
                answer = rec.get(a_col) or ""
                yes_votes = sum(_is_yes(rec.get(col)) for col in vote_cols[:3])
            except (KeyError, TypeError):
                raise CorpusError(f"{path}: row {i}: malformed record") from None
            label = "bully" if yes_votes >= 2 else "none"
            anon = _formspring_anonymous(rec.get(asker_col) if asker_col else "known")
            text = f"{question} {answer}".strip()
            if not text:
                continue
            rows.append(format_canonical_row(
                f"formspring-{i - 1}", "Formspring", label, anon, text))
        return rows


def ingest_formspring_xml(path) -> list[str]:
    """The original Formspring XML: POST elements with TEXT and three
    LABELDATA/ANSWER verdicts."""
    path = Path(path)
    try:
        tree = ElementTree.parse(path)
    except ElementTree.ParseError as exc:
        raise CorpusError(f"{path}: not parseable as XML: {exc}") from None
    rows = []
    posts = [el for el in tree.iter() if el.tag.upper() == "POST"]
    if not posts:
        raise CorpusError(f"{path}: no POST elements found")
    for i, post in enumerate(posts, start=1):
        text_el = next((c for c in post.iter() if c.tag.upper() == "TEXT"), None)
        answers = [c for c in post.iter() if c.tag.upper() == "ANSWER"]
        asker_el = next((c for c in post.iter() if c.tag.upper() == "ASKER"), None)
        text = (text_el.text or "") if text_el is not None else ""
        if not text.strip():
            continue
        yes_votes = sum(_is_yes(a.text) for a in answers[:3])
        label = "bully" if yes_votes >= 2 else "none"
        anon = _formspring_anonymous(asker_el.text if asker_el is not None else "known")
        rows.append(format_canonical_row(
            f"formspring-{i}", "Formspring", label, anon, text))
    return rows


_TWITTER_LABELS = {
    "racism": "racism", "racist": "racism",
    "sexism": "sexism", "sexist": "sexism",
    "none": "none", "neither": "none", "normal": "none",
}


def ingest_twitter_csv(path) -> list[str]:
    """Recovered tweet texts with racism/sexism/none annotations."""
    path = Path(path)
    with open(path, encoding="utf-8", errors="replace", newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames:
            raise CorpusError(f"{path}: empty file")
        text_col = _pick_column(
            reader.fieldnames, ("text", "tweet", "tweet_text", "content"), path, "text")
        label_col = _pick_column(
            reader.fieldnames, ("label", "class", "annotation", "category"), path, "label")
        id_col = None
        for cand in ("id", "tweet_id", "tweetid"):
            if cand in {n.lower().strip() for n in reader.fieldnames if n}:
                id_col = _pick_column(reader.fieldnames, (cand,), path, "id")
                break
        rows = []
        for i, rec in enumerate(reader, start=2):
            raw_label = (rec.get(label_col) or "").strip().lower()
            if raw_label not in _TWITTER_LABELS:
                raise CorpusError(
                    f"{path}: row {i}: unknown label {raw_label!r}; accepted: "
                    f"{', '.join(sorted(set(_TWITTER_LABELS)))}")
            text = rec.get(text_col) or ""
            if not text.strip():
                continue
            post_id = rec.get(id_col) if id_col else None
            rows.append(format_canonical_row(
                f"twitter-{post_id or i - 1}", "Twitter",
                _TWITTER_LABELS[raw_label], None, text))
        return rows


def ingest_wikipedia_tsv(comments_path, annotations_path=None) -> list[str]:
    """Wikipedia talk-page comments; a comment is an attack when the mean
    annotator attack vote exceeds 0.5.

    With ``annotations_path`` the per-worker annotation file is aggregated
    by rev_id; otherwise the comments file itself must carry an ``attack``
    fraction column. Logged-out comments count as anonymous.
    """
    comments_path = Path(comments_path)
    votes: dict[str, list[float]] = {}
    if annotations_path is not None:
        with open(annotations_path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh, delimiter="\t")
            if not reader.fieldnames:
                raise CorpusError(f"{annotations_path}: empty file")
            id_col = _pick_column(reader.fieldnames, ("rev_id", "id"), annotations_path, "rev_id")
            attack_col = _pick_column(reader.fieldnames, ("attack",), annotations_path, "attack")
            for i, rec in enumerate(reader, start=2):
                try:
                    votes.setdefault(rec[id_col], []).append(float(rec[attack_col]))
                except (KeyError, ValueError):
                    raise CorpusError(
                        f"{annotations_path}: row {i}: malformed attack vote") from None
    with open(comments_path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        if not reader.fieldnames:
            raise CorpusError(f"{comments_path}: empty file")
        id_col = _pick_column(reader.fieldnames, ("rev_id", "id"), comments_path, "rev_id")
        text_col = _pick_column(
            reader.fieldnames, ("comment", "comment_text", "text"), comments_path, "comment")
        lower = {n.lower().strip() for n in reader.fieldnames if n}
        attack_col = "attack" if "attack" in lower else None
        logged_col = "logged_in" if "logged_in" in lower else None
        if attack_col:
            attack_col = _pick_column(reader.fieldnames, ("attack",), comments_path, "attack")
        if logged_col:
            logged_col = _pick_column(reader.fieldnames, ("logged_in",), comments_path, "logged_in")
        rows = []
        for i, rec in enumerate(reader, start=2):
            rev_id = rec.get(id_col)
            if annotations_path is not None:
                if rev_id not in votes:
                    continue
                fraction = float(np.mean(votes[rev_id]))
            elif attack_col:
                try:
                    fraction = float(rec.get(attack_col))
                except (TypeError, ValueError):
                    raise CorpusError(
                        f"{comments_path}: row {i}: malformed attack value") from None
            else:
                raise CorpusError(
                    f"{comments_path}: no attack column and no annotations file")
            text = (rec.get(text_col) or "").replace("NEWLINE_TOKEN", " ")
            text = text.replace("TAB_TOKEN", " ")
            if not text.strip():
                continue
            label = "bully" if fraction > 0.5 else "none"
            anonymous = False
            if logged_col is not None:
                logged_in = (rec.get(logged_col) or "").strip().lower()
                anonymous = logged_in in ("false", "0", "f", "no", "")
            rows.append(format_canonical_row(
                f"wikipedia-{rev_id or i - 1}", "Wikipedia", label, anonymous, text))
        return rows


def ingest(platform: str, path, out_path, annotations_path=None) -> int:
    """Convert a raw platform export to the canonical format; returns the
    number of records written."""
    if platform == "Formspring":
        if str(path).lower().endswith(".xml"):
            rows = ingest_formspring_xml(path)
        else:
            rows = ingest_formspring_csv(path)
    elif platform == "Twitter":
        rows = ingest_twitter_csv(path)
    elif platform == "Wikipedia":
        rows = ingest_wikipedia_tsv(path, annotations_path)
    else:
        raise CorpusError(
            f"unknown platform {platform!r}; expected one of {PLATFORMS}")
    return write_canonical(rows, out_path)


def subsample(corpus: LabeledCorpus, n: int, seed: int) -> LabeledCorpus:
    """Label-stratified random subsample of at most n posts."""
    if n >= len(corpus.posts):
        return corpus
    by_class: dict[str, list[Post]] = {label: [] for label in corpus.label_space}
    for post in corpus.posts:
        by_class[post.label].append(post)
    rng = random.Random(seed)
    keep: list[Post] = []
    total = len(corpus.posts)
    for label in corpus.label_space:
        group = by_class[label]
        take = max(1, round(n * len(group) / total)) if group else 0
        rng.shuffle(group)
        keep.extend(group[:take])
    keep.sort(key=lambda p: p.id)
    return LabeledCorpus.from_posts(
        keep, corpus.label_space,
        vocabulary_size_with_stopwords=corpus.vocabulary_size_with_stopwords)
