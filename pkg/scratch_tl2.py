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

def train_full(corpus, epochs):
    posts = oversample(list(corpus.posts), minority_classes(corpus.label_space),
                       3, seed=CV_SEED)
    est = NeuralTextClassifier(architecture="BLSTM_ATTN",
                               max_len=corpus.length_at_95, epochs=epochs, **NN)
    return est.fit(posts).model_

# re-verify C5 numbers under the renamed vocabulary (random init only)
for rate in (1, 3):
    est = NeuralTextClassifier(architecture="BLSTM_ATTN", epochs=12,
                               max_len=fcorpus.length_at_95, **NN)
    rep = cross_validate(fcorpus, est, k=5, oversample_rate=rate, seed=CV_SEED)
    m = rep.mean
    print(f"C5 random rate={rate}: F1={m.f1['bully']:.3f} R={m.recall['bully']:.3f} "
          f"acc={m.accuracy:.3f}", flush=True)

t0 = time.time()
f_source = train_full(fcorpus, 12)
w_source = train_full(wcorpus, 16)
tl1_wf = tl1_evaluate(w_source, fcorpus)
tl1_fw = tl1_evaluate(f_source, wcorpus)
print(f"TL1 W+->F R={tl1_wf.recall['bully']:.3f} | F+->W R={tl1_fw.recall['bully']:.3f} "
      f"[need <0.3] ({time.time()-t0:.0f}s)", flush=True)

for flavor, ep in (("TL2", 16), ("TL3", 16)):
    t1 = time.time()
    rep = transfer_cross_validate(w_source, fcorpus, flavor, k=5,
                                  oversample_rate=3, seed=CV_SEED, epochs=ep,
                                  batch=128, lr=1e-3, max_len=fcorpus.length_at_95)
    m = rep.mean
    print(f"{flavor} wf ep={ep}: R={m.recall['bully']:.3f} F1={m.f1['bully']:.3f} "
          f"acc={m.accuracy:.3f} ({time.time()-t1:.0f}s)", flush=True)

for ep in (16, 24):
    t1 = time.time()
    rep = transfer_cross_validate(f_source, wcorpus, "TL3", k=5,
                                  oversample_rate=3, seed=CV_SEED, epochs=ep,
                                  batch=128, lr=1e-3, max_len=wcorpus.length_at_95)
    m = rep.mean
    print(f"TL3 fw ep={ep}: R={m.recall['bully']:.3f} F1={m.f1['bully']:.3f} "
          f"({time.time()-t1:.0f}s)", flush=True)
