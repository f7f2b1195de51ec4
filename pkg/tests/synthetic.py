"""Synthetic surrogate corpora for the acceptance suite.

The public corpora cannot be bundled, so pattern criteria run against
generated stand-ins with the same structural properties:

* heavy class imbalance with a long-tail (Zipf) vocabulary of bullying cue
  words, sample-inefficient to learn without replication;
* a mild common-word frequency shift on bullying posts (real bullying
  carries dense non-lexicon cues: a large share of bullying posts contain
  no swear word, yet trained detectors recall them);
* a hapax tail in both classes, so unfamiliar words alone never signal
  bullying and zero-shot cross-platform transfer cannot ride an
  out-of-vocabulary artifact;
* platform-specific cue vocabularies over a shared common core (what is
  abusive on one platform is unknown vocabulary on the other);
* for the long-post corpus, cues concentrated at the start of long posts
  (the structural reason a last-state reader trails pooling and
  bidirectional readers).

Corpora are written through the canonical file format and loaded with the
real ingestion path.
"""

from __future__ import annotations

import numpy as np

from cbdetect.corpus import format_canonical_row, load_dataset, truncate

CORE_COMMON = [f"word{i:02d}" for i in range(60)]

# bully-cue vocabularies; the heads overlap the bundled profanity lexicon so
# swearing statistics behave, the tails are synthetic rare cues
FORMSPRING_CUES = (
    ["moron", "loser", "idiot", "stupid", "bitch", "skank", "jerk", "scum",
     "freak", "dumbass", "fatso", "retard"]
    + [f"fslur{i:03d}" for i in range(288)]
)
WIKIPEDIA_CUES = (
    ["vandal", "liar", "troll", "fool", "imbecile", "fraud", "crank",
     "buffoon", "hypocrite", "charlatan", "crackpot", "garbage"]
    + [f"wslur{i:03d}" for i in range(288)]
)

HAPAX_RATE = 0.08  # chance a common slot draws a platform rare word instead


def _zipf(n, a):
    p = np.arange(1, n + 1, dtype=float) ** (-a)
    return p / p.sum()


def _common_token(rng, prefix, wp):
    if rng.random() < HAPAX_RATE:
        return f"{prefix}rare{int(rng.integers(0, 4000)):04d}"
    return str(rng.choice(CORE_COMMON, p=wp))


def generate_formspring_like(tmp_dir, n_posts=1400, bully_fraction=0.07,
                             p_cue_bully=0.52, p_cue_none=0.02,
                             cue_zipf=0.8, style_none=1.1, style_bully=1.5,
                             length=(8, 21), seed=0):
    """Short-post corpus, ~7% bullying minority."""
    rng = np.random.default_rng(seed)
    cue_p = _zipf(len(FORMSPRING_CUES), cue_zipf)
    none_p = _zipf(len(CORE_COMMON), style_none)
    bully_p = _zipf(len(CORE_COMMON), style_bully)
    rows = []
    for i in range(n_posts):
        bully = rng.random() < bully_fraction
        n_tok = int(rng.integers(*length))
        p_cue = p_cue_bully if bully else p_cue_none
        wp = bully_p if bully else none_p
        tokens = [
            str(rng.choice(FORMSPRING_CUES, p=cue_p)) if rng.random() < p_cue
            else _common_token(rng, "f", wp)
            for _ in range(n_tok)
        ]
        anon = rng.random() < (0.75 if bully else 0.5)
        rows.append(format_canonical_row(
            f"sf{i}", "Formspring", "bully" if bully else "none", anon,
            " ".join(tokens)))
    path = tmp_dir / "surrogate_formspring.tsv"
    path.write_text("".join(r + "\n" for r in rows), encoding="utf-8")
    corpus = load_dataset("Formspring", path)
    return truncate(corpus, corpus.length_at_95), path


def generate_wikipedia_like(tmp_dir, n_posts=700, attack_fraction=0.13,
                            p_cue_attack=0.5, p_cue_none=0.004,
                            cue_zipf=0.8, head_len=8, length=(90, 130),
                            seed=1):
    """Long-post corpus where attack cues sit in the first few tokens and a
    long neutral tail follows. A last-state reader must carry the evidence
    ~120 noisy steps (dropout corrupts the chain every step), while
    max-pooling, the backward direction, and attention read the head
    directly; this is the structural reason the unidirectional LSTM trails
    the other architectures here."""
    rng = np.random.default_rng(seed)
    cue_p = _zipf(len(WIKIPEDIA_CUES), cue_zipf)
    common_p = _zipf(len(CORE_COMMON), 1.1)
    rows = []
    for i in range(n_posts):
        attack = rng.random() < attack_fraction
        T = int(rng.integers(*length))
        tokens = []
        for t in range(T):
            rate = p_cue_attack if (attack and t < head_len) else p_cue_none
            if rng.random() < rate:
                tokens.append(str(rng.choice(WIKIPEDIA_CUES, p=cue_p)))
            else:
                tokens.append(_common_token(rng, "w", common_p))
        anon = rng.random() < (0.55 if attack else 0.25)
        rows.append(format_canonical_row(
            f"sw{i}", "Wikipedia", "bully" if attack else "none", anon,
            " ".join(tokens)))
    path = tmp_dir / "surrogate_wikipedia.tsv"
    path.write_text("".join(r + "\n" for r in rows), encoding="utf-8")
    corpus = load_dataset("Wikipedia", path)
    return truncate(corpus, corpus.length_at_95), path


def write_embedding_file(tmp_dir, corpora, dim=32, seed=7, name="vectors.txt"):
    """Synthetic pretrained-vector file covering the corpora vocabularies;
    the value scale matches the random-init scale."""
    rng = np.random.default_rng(seed)
    words = sorted({t for c in corpora for p in c.posts for t in p.tokens})
    path = tmp_dir / name
    with open(path, "w", encoding="utf-8") as fh:
        for word in words:
            vec = rng.uniform(-0.05, 0.05, size=dim)
            fh.write(word + " " + " ".join(f"{v:.6f}" for v in vec) + "\n")
    return path
