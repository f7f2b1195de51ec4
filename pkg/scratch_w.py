import sys, time, tempfile
from pathlib import Path
sys.path.insert(0, "tests")
import numpy as np
from synthetic import (generate_formspring_like, generate_wikipedia_like,
                       write_embedding_file)
from cbdetect.corpus import oversample, minority_classes
from cbdetect.nnmodels import NeuralTextClassifier
from cbdetect.evaluation import cross_validate
from cbdetect.transfer import tl1_evaluate, transfer_cross_validate

CV_SEED = 11
tmp = Path(tempfile.mkdtemp())
fcorpus, _ = generate_formspring_like(tmp)
wcorpus, _ = generate_wikipedia_like(tmp)
print("W:", len(wcorpus), wcorpus.class_counts(), "len@95", wcorpus.length_at_95, flush=True)

# C5 glove fix check (one init, both rates)
for name, seed in (("glove", 7), ("sswe", 8)):
    vec = write_embedding_file(tmp, [fcorpus, wcorpus], seed=seed, name=f"{name}.txt")
    res = {}
    for rate in (1, 3):
        est = NeuralTextClassifier(architecture="BLSTM_ATTN", embed_dim=32, hidden=32,
                                   epochs=12, batch=128, lr=1e-3, seed=0,
                                   embed_init="glove", embed_path=str(vec),
                                   max_len=fcorpus.length_at_95)
        rep = cross_validate(fcorpus, est, k=5, oversample_rate=rate, seed=CV_SEED)
        res[rate] = rep.mean.f1["bully"]
    print(f"C5 {name}: F F1={res[1]:.3f} | F+ F1={res[3]:.3f} gap={res[3]-res[1]:.3f}", flush=True)

# C6 with new W corpus at different epoch counts
for ep in (16, 20):
    t0 = time.time()
    f1s = {}
    for arch in ("CNN", "LSTM", "BLSTM", "BLSTM_ATTN"):
        est = NeuralTextClassifier(architecture=arch, embed_dim=32, hidden=32,
                                   epochs=ep, batch=128, lr=1e-3, seed=0,
                                   max_len=wcorpus.length_at_95)
        rep = cross_validate(wcorpus, est, k=5, oversample_rate=3, seed=CV_SEED)
        f1s[arch] = rep.mean.f1["bully"]
    others = {k: v for k, v in f1s.items() if k != "LSTM"}
    print(f"C6 ep={ep}: " + " ".join(f"{k}={v:.3f}" for k, v in f1s.items())
          + f" margin={min(others.values()) - f1s['LSTM']:.3f} ({time.time()-t0:.0f}s)", flush=True)
