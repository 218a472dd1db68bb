"""Comparison classifiers: brute-force kNN and one-vs-rest linear SVM."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ImuGestError

log = logging.getLogger(__name__)

WEIGHTINGS = ("uniform", "inverse-distance")


@dataclass(frozen=True)
class KnnModel:
    points: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    k: int = 5
    weighting: str = "uniform"

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        labels = np.asarray(self.labels, dtype=int).ravel()
        if labels.size != points.shape[0]:
            raise ValueError("labels must align with points")
        if not 1 <= self.k <= points.shape[0]:
            raise ValueError(f"k={self.k} outside [1, {points.shape[0]}]")
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"unknown weighting {self.weighting!r}")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)

    def to_dict(self):
        return {"kind": "knn", "k": self.k, "weighting": self.weighting,
                "points": self.points.tolist(), "labels": self.labels.tolist()}

    @classmethod
    def from_dict(cls, doc):
        return cls(np.array(doc["points"], dtype=float), np.array(doc["labels"], dtype=int),
                   int(doc["k"]), doc["weighting"])


def knn_fit(X, labels, k=5, weighting="uniform"):
    # kNN has no training step; clip k so tiny training sets stay usable
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return KnnModel(X, labels, min(k, X.shape[0]), weighting)


def knn_predict(model: KnnModel, x):
    """Vote among the ``k`` nearest training points (Euclidean).

    Distance ties go to the lower point index, vote ties to the lower class
    id.  Under inverse-distance weighting an exact match returns that
    point's label.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != model.points.shape[1]:
        raise DimensionError(f"expected {model.points.shape[1]} features, got {x.size}")
    dist = np.sqrt(np.sum((model.points - x) ** 2, axis=1))
    nearest = np.argsort(dist, kind="stable")[:model.k]
    labels = model.labels[nearest]
    if model.weighting == "uniform":
        weights = np.ones(model.k)
    else:
        d = dist[nearest]
        if d[0] == 0.0:
            return int(labels[0])
        weights = 1.0 / d
    votes = np.zeros(int(model.labels.max()) + 1)
    np.add.at(votes, labels, weights)
    return int(np.argmax(votes))


def knn_predict_batch(model, X):
    return np.array([knn_predict(model, x) for x in np.atleast_2d(X)], dtype=int)


@dataclass(frozen=True)
class SvmModel:
    weights: np.ndarray = field(repr=False)  # [K, d]
    biases: np.ndarray
    center: np.ndarray | None = field(default=None, repr=False)
    scale: np.ndarray | None = field(default=None, repr=False)
    lam: float = 1e-3
    epochs: int = 200
    seed: int = 42

    @property
    def n_classes(self):
        return self.weights.shape[0]

    def scores(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.weights.shape[1]:
            raise DimensionError(f"expected {self.weights.shape[1]} features, got {X.shape[1]}")
        if self.center is not None:
            X = (X - self.center) / self.scale
        return X @ self.weights.T + self.biases

    def to_dict(self):
        return {
            "kind": "svm",
            "weights": self.weights.tolist(),
            "biases": self.biases.tolist(),
            "center": None if self.center is None else self.center.tolist(),
            "scale": None if self.scale is None else self.scale.tolist(),
            "lam": self.lam, "epochs": self.epochs, "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc):
        arr = (lambda v: None if v is None else np.array(v, dtype=float))
        return cls(np.array(doc["weights"], dtype=float), np.array(doc["biases"], dtype=float),
                   arr(doc["center"]), arr(doc["scale"]),
                   float(doc["lam"]), int(doc["epochs"]), int(doc["seed"]))


def _pegasos_binary(X, y, lam, epochs, rng):
    """Hinge-loss subgradient descent with step ``1 / (lam * t)``.

    The bias is learned as the weight of a constant feature.  Returns the
    average of the iterates of the final epoch.
    """
    m, d = X.shape
    Xa = np.hstack([X, np.ones((m, 1))])
    w = np.zeros(d + 1)
    avg = np.zeros(d + 1)
    t = 0
    radius = 1.0 / np.sqrt(lam)
    for epoch in range(epochs):
        order = rng.permutation(m)
        if epoch == epochs - 1:
            avg[:] = 0.0
        for i in order:
            t += 1
            eta = 1.0 / (lam * t)
            margin = y[i] * np.dot(w, Xa[i])
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += eta * y[i] * Xa[i]
            norm = np.sqrt(np.dot(w, w))
            if norm > radius:
                w *= radius / norm
            if epoch == epochs - 1:
                avg += w
    avg /= m
    return avg[:-1], avg[-1]


def svm_train(X, labels, lam=1e-3, epochs=200, seed=42, standardize=True, n_classes=None):
    """Train one binary linear SVM per class (class vs. rest).

    Rows are put into a canonical order before the seeded epoch shuffles, so
    the model does not depend on the order rows arrive in.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    labels = np.asarray(labels, dtype=int).ravel()
    if labels.size != X.shape[0]:
        raise DimensionError("labels must align with rows")
    present = np.unique(labels)
    if present.size < 2:
        raise ImuGestError("SVM training needs at least 2 classes")
    k = int(n_classes or labels.max() + 1)
    m, d = X.shape
    canon = np.lexsort(np.column_stack([X, labels]).T[::-1])
    X, labels = X[canon], labels[canon]

    center = scale = None
    if standardize:
        center = X.mean(axis=0)
        scale = X.std(axis=0, ddof=1) if m > 1 else np.ones(d)
        scale = np.where(scale > 0, scale, 1.0)
        X = (X - center) / scale

    counts = np.bincount(labels, minlength=k)
    if np.all(X == X[0]):
        log.warning("all feature vectors identical; SVM falls back to the majority class")
        return SvmModel(np.zeros((k, d)), counts / m, center, scale, lam, epochs, seed)

    weights = np.zeros((k, d))
    biases = np.full(k, -1.0)
    for c in range(k):
        if counts[c] == 0:
            continue
        y = np.where(labels == c, 1.0, -1.0)
        rng = np.random.default_rng([seed, c])
        weights[c], biases[c] = _pegasos_binary(X, y, lam, epochs, rng)
    return SvmModel(weights, biases, center, scale, lam, epochs, seed)


def svm_predict(model: SvmModel, x):
    """``argmax_c (w_c . x + b_c)``, lowest class id on ties."""
    return int(np.argmax(model.scores(np.asarray(x, dtype=float).ravel())[0]))


def svm_predict_batch(model, X):
    return np.argmax(model.scores(X), axis=1)
