import sys, time, tempfile
from pathlib import Path
sys.path.insert(0, "tests")
from synthetic import generate_formspring_like, generate_wikipedia_like
from cbdetect.corpus import oversample, minority_classes
from cbdetect.nnmodels import NeuralTextClassifier
from cbdetect.transfer import tl1_evaluate, transfer_cross_validate

CV_SEED = 11
NN = dict(embed_dim=32, hidden=32, batch=128, lr=1e-3, seed=0)
TRANSFER_EPOCHS = 16

tmp = Path(tempfile.mkdtemp())
fcorpus, _ = generate_formspring_like(tmp)
wcorpus, _ = generate_wikipedia_like(tmp)
print("F len@95", fcorpus.length_at_95, fcorpus.class_counts(), flush=True)
print("W len@95", wcorpus.length_at_95, wcorpus.class_counts(), flush=True)

def train_full(corpus, epochs):
    posts = oversample(list(corpus.posts), minority_classes(corpus.label_space),
                       3, seed=CV_SEED)
    est = NeuralTextClassifier(architecture="BLSTM_ATTN",
                               max_len=corpus.length_at_95, epochs=epochs, **NN)
    return est.fit(posts).model_

t0 = time.time()
f_source = train_full(fcorpus, 12)
w_source = train_full(wcorpus, 16)
print(f"sources ({time.time()-t0:.0f}s)", flush=True)

tl1_wf = tl1_evaluate(w_source, fcorpus)
tl1_fw = tl1_evaluate(f_source, wcorpus)
print(f"TL1 W+->F R={tl1_wf.recall['bully']:.3f} P={tl1_wf.precision['bully']:.3f} "
      f"| F+->W R={tl1_fw.recall['bully']:.3f} [need <0.3]", flush=True)

res = {}
for name, src, tgt in (("wf", w_source, fcorpus), ("fw", f_source, wcorpus)):
    for flavor in ("TL2", "TL3"):
        t1 = time.time()
        rep = transfer_cross_validate(
            src, tgt, flavor, k=5, oversample_rate=3, seed=CV_SEED,
            epochs=TRANSFER_EPOCHS, batch=NN["batch"], lr=NN["lr"],
            max_len=tgt.length_at_95)
        res[(flavor, name)] = rep.mean
        m = rep.mean
        print(f"{flavor} {name}: P={m.precision['bully']:.3f} R={m.recall['bully']:.3f} "
              f"F1={m.f1['bully']:.3f} acc={m.accuracy:.3f} ({time.time()-t1:.0f}s)",
              flush=True)

print(f"TL2 W+->F recall {res[('TL2','wf')].recall['bully']:.3f} [>0.9], "
      f"F1 {res[('TL2','wf')].f1['bully']:.3f} [>=0.90]", flush=True)
print(f"|TL3-TL2| wf={abs(res[('TL3','wf')].f1['bully']-res[('TL2','wf')].f1['bully']):.3f} "
      f"fw={abs(res[('TL3','fw')].f1['bully']-res[('TL2','fw')].f1['bully']):.3f} [<=0.05]",
      flush=True)
print(f"total {time.time()-t0:.0f}s")
