"""Stratified splitting, accuracy/confusion reports and the learning-curve sweeps."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ImuGestError
from .features import FeatureMatrix
from .pca import fit_pca
from .pipeline import ClassifierConfig, fit_pipeline

DEFAULT_ITERATION_GRID = (0, 10, 25, 50, 100, 150, 200, 300)
DEFAULT_FEATURE_GRID = tuple(range(1, 11))


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    confusion: np.ndarray
    per_class_recall: np.ndarray
    n_test: int

    @property
    def mean_recall(self):
        valid = self.per_class_recall[~np.isnan(self.per_class_recall)]
        return float(valid.mean()) if valid.size else float("nan")

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "n_test": self.n_test,
            "confusion": self.confusion.tolist(),
            "per_class_recall": [None if math.isnan(r) else r
                                 for r in self.per_class_recall.tolist()],
        }


def split_stratified(fm: FeatureMatrix, test_fraction=0.2, seed=42):
    """Per-class proportional split; returns ``(train, test)``.

    Each class contributes ``round(n_c * test_fraction)`` test rows, kept
    within ``[1, n_c - 1]``.  Rows keep their original relative order.
    """
    if not 0 < test_fraction < 1:
        raise ImuGestError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    test_idx = []
    for c in np.unique(fm.labels):
        rows = np.flatnonzero(fm.labels == c)
        if rows.size < 2:
            raise ImuGestError(f"class {c} has {rows.size} row(s); at least 2 are needed")
        n_test = int(math.floor(rows.size * test_fraction + 0.5))
        n_test = min(max(n_test, 1), rows.size - 1)
        test_idx.extend(rng.permutation(rows)[:n_test].tolist())
    is_test = np.zeros(fm.n_rows, dtype=bool)
    is_test[test_idx] = True
    return fm.take(np.flatnonzero(~is_test)), fm.take(np.flatnonzero(is_test))


def evaluate(predict_fn, test: FeatureMatrix, n_classes=None):
    """Score ``predict_fn`` (batch of rows -> class ids) on ``test``."""
    if test.n_rows < 1:
        raise ImuGestError("no test rows")
    pred = np.asarray(predict_fn(test.values), dtype=int).ravel()
    truth = test.labels
    k = int(max(n_classes or 0, truth.max() + 1, pred.max() + 1))
    confusion = np.zeros((k, k), dtype=int)
    np.add.at(confusion, (truth, pred), 1)
    support = confusion.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        recall = np.where(support > 0, np.diag(confusion) / support, np.nan)
    return EvalReport(float(np.trace(confusion) / truth.size), confusion, recall, int(truth.size))


def sweep_iterations(dataset, iteration_grid=DEFAULT_ITERATION_GRID, l=10, seed=42,
                     cfg: ClassifierConfig | None = None):
    """DNN test accuracy for each iteration count (a fresh net per grid point)."""
    train, test = dataset
    grid = list(iteration_grid)
    if grid != sorted(grid):
        raise ImuGestError("iteration grid must be ascending")
    cfg = replace(cfg or ClassifierConfig(), kind="dnn", l=l, seed=seed)
    n_classes = int(max(train.labels.max(), test.labels.max()) + 1)
    pca = fit_pca(train, l, cfg.standardize)
    curve = []
    for T in grid:
        pipe, _ = fit_pipeline(train, replace(cfg, iterations=int(T)), n_classes, pca)
        curve.append((int(T), evaluate(pipe.predict, test, n_classes).accuracy))
    return curve


def sweep_features(dataset, l_grid=DEFAULT_FEATURE_GRID, iterations=150, seed=42,
                   cfg: ClassifierConfig | None = None):
    """DNN test accuracy for each retained component count ``l``."""
    train, test = dataset
    grid = list(l_grid)
    cfg = replace(cfg or ClassifierConfig(), kind="dnn", iterations=iterations, seed=seed)
    n_classes = int(max(train.labels.max(), test.labels.max()) + 1)
    limit = min(train.n_columns, train.n_rows - 1)
    if not grid or min(grid) < 1 or max(grid) > limit:
        raise ImuGestError(f"feature grid must lie within [1, {limit}]")
    full = fit_pca(train, max(grid), cfg.standardize)
    curve = []
    for l in grid:
        pipe, _ = fit_pipeline(train, replace(cfg, l=int(l)), n_classes, full.truncate(int(l)))
        curve.append((int(l), evaluate(pipe.predict, test, n_classes).accuracy))
    return curve


def write_curve(curve, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["param", "accuracy"])
        for param, acc in curve:
            writer.writerow([param, repr(float(acc))])


def read_curve(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [(int(r["param"]), float(r["accuracy"])) for r in csv.DictReader(fh)]
