import sys, time, tempfile
from pathlib import Path
sys.path.insert(0, "tests")
from synthetic import generate_formspring_like, generate_wikipedia_like
from cbdetect.corpus import oversample, minority_classes
from cbdetect.nnmodels import NeuralTextClassifier
from cbdetect.evaluation import cross_validate
from cbdetect.transfer import tl1_evaluate, transfer_cross_validate

CV_SEED = 11
NN = dict(embed_dim=32, hidden=32, batch=128, lr=1e-3, seed=0)

tmp = Path(tempfile.mkdtemp())
fcorpus, _ = generate_formspring_like(tmp)
wcorpus, _ = generate_wikipedia_like(tmp)
print("F:", fcorpus.class_counts(), "len@95", fcorpus.length_at_95, flush=True)
print("W:", wcorpus.class_counts(), "len@95", wcorpus.length_at_95, flush=True)

# C5 random check under the shared-universe vocabulary
for rate in (1, 3):
    est = NeuralTextClassifier(architecture="BLSTM_ATTN", epochs=12,
                               max_len=fcorpus.length_at_95, **NN)
    rep = cross_validate(fcorpus, est, k=5, oversample_rate=rate, seed=CV_SEED)
    m = rep.mean
    print(f"C5 random rate={rate}: F1={m.f1['bully']:.3f} R={m.recall['bully']:.3f} "
          f"acc={m.accuracy:.3f}", flush=True)

def train_full(corpus, epochs):
    posts = oversample(list(corpus.posts), minority_classes(corpus.label_space),
                       3, seed=CV_SEED)
    est = NeuralTextClassifier(architecture="BLSTM_ATTN",
                               max_len=corpus.length_at_95, epochs=epochs, **NN)
    return est.fit(posts).model_

t0 = time.time()
f_source = train_full(fcorpus, 12)
w_source = train_full(wcorpus, 16)
tl1_wf = tl1_evaluate(w_source, fcorpus)
tl1_fw = tl1_evaluate(f_source, wcorpus)
print(f"TL1 W+->F R={tl1_wf.recall['bully']:.3f} P={tl1_wf.precision['bully']:.3f} | "
      f"F+->W R={tl1_fw.recall['bully']:.3f} [need <0.3] ({time.time()-t0:.0f}s)",
      flush=True)

for ep in (16, 24):
    res = {}
    for name, src, tgt in (("wf", w_source, fcorpus), ("fw", f_source, wcorpus)):
        for flavor in ("TL2", "TL3"):
            t1 = time.time()
            rep = transfer_cross_validate(src, tgt, flavor, k=5,
                                          oversample_rate=3, seed=CV_SEED,
                                          epochs=ep, batch=128, lr=1e-3,
                                          max_len=tgt.length_at_95)
            m = rep.mean
            res[(flavor, name)] = m.f1["bully"]
            print(f"ep={ep} {flavor} {name}: R={m.recall['bully']:.3f} "
                  f"F1={m.f1['bully']:.3f} ({time.time()-t1:.0f}s)", flush=True)
    print(f"ep={ep}: |TL3-TL2| wf={abs(res[('TL3','wf')]-res[('TL2','wf')]):.3f} "
          f"fw={abs(res[('TL3','fw')]-res[('TL2','fw')]):.3f} [<=0.05]", flush=True)
    if ep == 16:
        ok16 = (abs(res[("TL3", "wf")] - res[("TL2", "wf")]) <= 0.04
                and abs(res[("TL3", "fw")] - res[("TL2", "fw")]) <= 0.04)
        if ok16:
            print("ep=16 sufficient, skipping ep=24", flush=True)
            break
