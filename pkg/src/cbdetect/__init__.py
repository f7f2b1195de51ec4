"""Cross-platform cyberbullying detection.

Corpus ingestion for three social-media platforms, traditional and neural
text classifiers built on a from-scratch reverse-mode autodiff core,
minority-class oversampling, transfer learning of learned word embeddings,
and embedding-space analysis (cosine neighbors, exact t-SNE).
"""

from .baselines import BaselineModel, TextBaseline, predict_baseline, train_baseline
from .corpus import (LabeledCorpus, Post, Vocabulary, build_vocabulary,
                     compute_length_percentile, load_dataset, oversample,
                     preprocess, stratified_folds, truncate)
from .embedspace import (EmbeddingMatrix, ExactTSNE, Projection2D, init_random,
                         load_pretrained, nearest_neighbors, tsne_project)
from .evaluation import (FoldReport, Metrics, confusion, cross_validate,
                         metrics_from_confusion)
from .lexstats import StatsTable, conditional_stats, load_lexicon
from .nnmodels import (ModelConfig, NeuralModel, NeuralTextClassifier,
                       build_model, predict, train_model)
from .transfer import (TransferClassifier, TransferPlan, align_vocab,
                       tl1_evaluate, tl2_train, tl3_train,
                       transfer_cross_validate)

__version__ = "0.1.0"

__all__ = [
    "BaselineModel", "TextBaseline", "predict_baseline", "train_baseline",
    "LabeledCorpus", "Post", "Vocabulary", "build_vocabulary",
    "compute_length_percentile", "load_dataset", "oversample", "preprocess",
    "stratified_folds", "truncate",
    "EmbeddingMatrix", "ExactTSNE", "Projection2D", "init_random",
    "load_pretrained", "nearest_neighbors", "tsne_project",
    "FoldReport", "Metrics", "confusion", "cross_validate",
    "metrics_from_confusion",
    "StatsTable", "conditional_stats", "load_lexicon",
    "ModelConfig", "NeuralModel", "NeuralTextClassifier", "build_model",
    "predict", "train_model",
    "TransferClassifier", "TransferPlan", "align_vocab", "tl1_evaluate",
    "tl2_train", "tl3_train", "transfer_cross_validate",
]
