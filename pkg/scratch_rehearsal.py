"""Rehearsal of the surrogate acceptance criteria before freezing tests."""
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
NN = dict(embed_dim=32, hidden=32, epochs=12, batch=128, lr=1e-3, seed=0)

tmp = Path(tempfile.mkdtemp())
t00 = time.time()
fcorpus, _ = generate_formspring_like(tmp)
wcorpus, _ = generate_wikipedia_like(tmp)
vec_path = write_embedding_file(tmp, [fcorpus, wcorpus])
print("F:", len(fcorpus), fcorpus.class_counts(), "len@95", fcorpus.length_at_95)
print("W:", len(wcorpus), wcorpus.class_counts(), "len@95", wcorpus.length_at_95)

# --- criterion 5/8: oversampling effect per init on F ---
for init in ("random", "glove", "sswe"):
    kw = dict(NN, embed_init=init,
              embed_path=str(vec_path) if init != "random" else None)
    t0 = time.time()
    res = {}
    for rate in (1, 3):
        est = NeuralTextClassifier(architecture="BLSTM_ATTN",
                                   max_len=fcorpus.length_at_95, **kw)
        rep = cross_validate(fcorpus, est, k=5, oversample_rate=rate, seed=CV_SEED)
        res[rate] = rep.mean.for_class("bully") + (rep.mean.accuracy,)
    (p1, r1, f11, _), (p3, r3, f13, a3) = res[1], res[3]
    print(f"C5 {init:6s}: F F1={f11:.3f} | F+ F1={f13:.3f} R={r3:.3f} acc={a3:.3f} "
          f"gap={f13 - f11:.3f}  [need gap>=0.2, F+>=0.85] ({time.time()-t0:.0f}s)")

# --- criterion 6: architecture comparison on W+ ---
t0 = time.time()
f1s = {}
for arch in ("CNN", "LSTM", "BLSTM", "BLSTM_ATTN"):
    est = NeuralTextClassifier(architecture=arch, max_len=wcorpus.length_at_95, **NN)
    rep = cross_validate(wcorpus, est, k=5, oversample_rate=3, seed=CV_SEED)
    f1s[arch] = rep.mean.f1["bully"]
    print(f"C6 {arch:11s}: W+ F1={f1s[arch]:.3f}")
others_min = min(v for k, v in f1s.items() if k != "LSTM")
print(f"C6: LSTM={f1s['LSTM']:.3f} vs min(others)={others_min:.3f} "
      f"margin={others_min - f1s['LSTM']:.3f} [need >= 0.1] ({time.time()-t0:.0f}s)")

# --- criterion 7: transfer patterns ---
t0 = time.time()
def train_full(corpus, rate=3):
    posts = oversample(list(corpus.posts), minority_classes(corpus.label_space),
                       rate, seed=CV_SEED)
    est = NeuralTextClassifier(architecture="BLSTM_ATTN",
                               max_len=corpus.length_at_95, **NN)
    return est.fit(posts).model_

w_source = train_full(wcorpus)
f_source = train_full(fcorpus)
print(f"C7 sources trained ({time.time()-t0:.0f}s)")

tl1_wf = tl1_evaluate(w_source, fcorpus)
tl1_fw = tl1_evaluate(f_source, wcorpus)
print(f"C7a TL1 recall: W+->F {tl1_wf.recall['bully']:.3f}, "
      f"F+->W {tl1_fw.recall['bully']:.3f}  [need < 0.3]")

results = {}
for name, src, tgt in (("W+->F", w_source, fcorpus), ("F+->W", f_source, wcorpus)):
    for flavor in ("TL2", "TL3"):
        t1 = time.time()
        rep = transfer_cross_validate(
            src, tgt, flavor, k=5, oversample_rate=3, seed=CV_SEED,
            epochs=NN["epochs"], batch=NN["batch"], lr=NN["lr"],
            max_len=tgt.length_at_95)
        results[(name, flavor)] = rep.mean
        m = rep.mean
        print(f"C7 {flavor} {name}: P={m.precision['bully']:.3f} "
              f"R={m.recall['bully']:.3f} F1={m.f1['bully']:.3f} "
              f"acc={m.accuracy:.3f} ({time.time()-t1:.0f}s)")

wf2, wf3 = results[("W+->F", "TL2")], results[("W+->F", "TL3")]
fw2, fw3 = results[("F+->W", "TL2")], results[("F+->W", "TL3")]
print(f"C7a TL2 recall: W+->F {wf2.recall['bully']:.3f} [need > 0.9]")
print(f"C7b TL2 W+->F F1 = {wf2.f1['bully']:.3f} [need >= 0.90]")
print(f"C7c |TL3-TL2|: W+->F {abs(wf3.f1['bully']-wf2.f1['bully']):.3f}, "
      f"F+->W {abs(fw3.f1['bully']-fw2.f1['bully']):.3f} [need <= 0.05]")
print(f"total {time.time()-t00:.0f}s")
