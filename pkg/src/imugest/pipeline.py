"""PCA + classifier bundles and their on-disk form."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import baselines, dnn
from .errors import DimensionError, SchemaError
from .features import FeatureMatrix
from .pca import PcaModel, fit_pca, project

MODEL_KINDS = ("dnn", "knn", "svm")
FORMAT_VERSION = 1


@dataclass(frozen=True)
class ClassifierConfig:
    kind: str = "dnn"
    l: int = 10
    standardize: bool = True
    hidden: tuple = dnn.DEFAULT_HIDDEN
    learning_rate: float = 1.0
    iterations: int = 150
    l2: float = 0.0
    k: int = 5
    weighting: str = "uniform"
    svm_lambda: float = 1e-3
    svm_epochs: int = 200
    seed: int = 42

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.l < 1:
            raise ValueError("l must be >= 1")


@dataclass(frozen=True)
class Pipeline:
    pca: PcaModel
    model: object
    kind: str
    n_classes: int

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.pca.d:
            raise DimensionError(f"model expects {self.pca.d} features, got {X.shape[1]}")
        z = project(self.pca, X)
        if self.kind == "dnn":
            return dnn.predict_batch(self.model, z)
        if self.kind == "knn":
            return baselines.knn_predict_batch(self.model, z)
        return baselines.svm_predict_batch(self.model, z)

    def to_dict(self):
        return {"format": FORMAT_VERSION, "kind": self.kind, "n_classes": self.n_classes,
                "pca": self.pca.to_dict(), "model": self.model.to_dict()}

    @classmethod
    def from_dict(cls, doc):
        kind = doc.get("kind")
        loaders = {"dnn": dnn.DnnModel, "knn": baselines.KnnModel, "svm": baselines.SvmModel}
        if kind not in loaders:
            raise SchemaError(f"unknown model kind {kind!r}")
        try:
            return cls(PcaModel.from_dict(doc["pca"]), loaders[kind].from_dict(doc["model"]),
                       kind, int(doc["n_classes"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed model document: {exc}") from exc


def fit_classifier(kind, Z, labels, cfg: ClassifierConfig, n_classes):
    """Train one classifier on already-projected inputs; returns (model, trace)."""
    if kind == "dnn":
        sizes = (Z.shape[1],) + tuple(cfg.hidden) + (n_classes,)
        hyper = dnn.Hyper(cfg.learning_rate, cfg.iterations, cfg.l2)
        return dnn.train(Z, dnn.one_hot(labels, n_classes), sizes, hyper, cfg.seed)
    if kind == "knn":
        return baselines.knn_fit(Z, labels, cfg.k, cfg.weighting), None
    return baselines.svm_train(Z, labels, cfg.svm_lambda, cfg.svm_epochs, cfg.seed,
                               n_classes=n_classes), None


def fit_pipeline(train: FeatureMatrix, cfg: ClassifierConfig, n_classes=None, pca=None):
    """Fit PCA (unless given) and the configured classifier on ``train``."""
    n_classes = int(n_classes or train.labels.max() + 1)
    if pca is None:
        pca = fit_pca(train, cfg.l, cfg.standardize)
    Z = project(pca, train.values)
    model, trace = fit_classifier(cfg.kind, Z, train.labels, cfg, n_classes)
    return Pipeline(pca, model, cfg.kind, n_classes), trace


def dump_json(doc, path):
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def save_pipeline(pipe: Pipeline, path):
    dump_json(pipe.to_dict(), path)


def load_pipeline(path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not a model file ({exc})") from exc
    return Pipeline.from_dict(doc)
