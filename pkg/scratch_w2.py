import sys, time, tempfile
from pathlib import Path
sys.path.insert(0, "tests")
import numpy as np
from cbdetect.corpus import format_canonical_row, load_dataset, truncate
from cbdetect.nnmodels import NeuralTextClassifier
from cbdetect.evaluation import cross_validate

COMMON = [f"word{i:02d}" for i in range(60)]
CUES = ["vandal", "liar", "troll", "fool", "imbecile", "fraud", "crank",
        "buffoon", "hypocrite", "charlatan", "crackpot", "garbage"] + \
       [f"wslur{i:03d}" for i in range(288)]

def _zipf(n, a):
    p = np.arange(1, n + 1, dtype=float) ** (-a)
    return p / p.sum()

tmp = Path(tempfile.mkdtemp())

def gen(n=800, frac=0.12, cue_rate_attack=0.2, cue_rate_none=0.004,
        span_frac=0.5, length=(40, 70), cue_zipf=0.8, seed=1, name="w.tsv"):
    rng = np.random.default_rng(seed)
    cue_p = _zipf(len(CUES), cue_zipf)
    common_p = _zipf(len(COMMON), 1.1)
    rows = []
    for i in range(n):
        attack = rng.random() < frac
        T = int(rng.integers(*length))
        span = max(3, int(T * span_frac))
        toks = []
        for t in range(T):
            in_span = t < span
            r = cue_rate_attack if (attack and in_span) else cue_rate_none
            toks.append(str(rng.choice(CUES, p=cue_p)) if rng.random() < r
                        else str(rng.choice(COMMON, p=common_p)))
        rows.append(format_canonical_row(f"sw{i}", "Wikipedia",
                                         "bully" if attack else "none",
                                         rng.random() < (0.55 if attack else 0.25),
                                         " ".join(toks)))
    path = tmp / name
    path.write_text("".join(r + "\n" for r in rows), encoding="utf-8")
    c = load_dataset("Wikipedia", path)
    return truncate(c, c.length_at_95)

for ep in (12, 14):
    corpus = gen(name=f"w{ep}.tsv")
    if ep == 12:
        print("W:", len(corpus), corpus.class_counts(), "len@95",
              corpus.length_at_95, flush=True)
    t0 = time.time()
    f1s = {}
    for arch in ("CNN", "LSTM", "BLSTM", "BLSTM_ATTN"):
        est = NeuralTextClassifier(architecture=arch, embed_dim=32, hidden=32,
                                   epochs=ep, batch=128, lr=1e-3, seed=0,
                                   max_len=corpus.length_at_95)
        rep = cross_validate(corpus, est, k=5, oversample_rate=3, seed=11)
        f1s[arch] = rep.mean.f1["bully"]
        print(f"  ep={ep} {arch}: {f1s[arch]:.3f}", flush=True)
    others = {k: v for k, v in f1s.items() if k != "LSTM"}
    print(f"ep={ep}: " + " ".join(f"{k}={v:.3f}" for k, v in f1s.items())
          + f" margin={min(others.values()) - f1s['LSTM']:.3f} "
          f"({time.time()-t0:.0f}s)", flush=True)
