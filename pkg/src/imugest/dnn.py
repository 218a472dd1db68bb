"""Fully connected sigmoid network trained by full-batch gradient descent.

Layout: ``layer_sizes = [n_in, h_1, ..., h_H, K]``.  Weight matrix ``L`` maps
layer ``L`` to ``L + 1`` and has shape ``[size_{L+1}, size_L + 1]`` with the
bias in column 0.  Every unit, including the ``K`` one-vs-all outputs, uses
the logistic sigmoid; the cost is the summed per-class cross-entropy with an
optional L2 penalty on the non-bias weights.

Backpropagation uses the output error ``a - y`` and propagates it through
the transposed weights, scaled by the sigmoid derivative ``a * (1 - a)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionError, TrainingDiverged

log = logging.getLogger(__name__)

DEFAULT_HIDDEN = (15, 15, 15)
COST_CLAMP = 1e-12


@dataclass(frozen=True)
class Hyper:
    learning_rate: float = 1.0
    iterations: int = 150
    l2: float = 0.0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")


@dataclass(frozen=True)
class DnnModel:
    layer_sizes: tuple
    weights: tuple = field(repr=False)
    seed: int = 0
    hyper: Hyper = Hyper()

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"bad layer sizes {sizes}")
        weights = tuple(np.array(w, dtype=float) for w in self.weights)
        if len(weights) != len(sizes) - 1:
            raise ValueError(f"{len(weights)} weight matrices for {len(sizes)} layers")
        for i, w in enumerate(weights):
            if w.shape != (sizes[i + 1], sizes[i] + 1):
                raise ValueError(f"weight {i} has shape {w.shape}, "
                                 f"expected {(sizes[i + 1], sizes[i] + 1)}")
            if not np.all(np.isfinite(w)):
                raise ValueError(f"weight {i} has non-finite entries")
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "weights", weights)

    @property
    def n_inputs(self):
        return self.layer_sizes[0]

    @property
    def n_classes(self):
        return self.layer_sizes[-1]

    def with_weights(self, weights):
        return replace(self, weights=tuple(weights))

    def to_dict(self):
        return {
            "kind": "dnn",
            "layer_sizes": list(self.layer_sizes),
            "weights": [w.tolist() for w in self.weights],
            "seed": self.seed,
            "hyper": {"learning_rate": self.hyper.learning_rate,
                      "iterations": self.hyper.iterations,
                      "l2": self.hyper.l2},
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(tuple(doc["layer_sizes"]),
                   tuple(np.array(w, dtype=float) for w in doc["weights"]),
                   int(doc["seed"]), Hyper(**doc["hyper"]))


@dataclass
class TrainTrace:
    initial_cost: float
    cost_per_iteration: list = field(default_factory=list)
    accuracy_per_checkpoint: list = field(default_factory=list)


def sigmoid(z):
    """Logistic function, evaluated without overflow for any finite input."""
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return out if out.ndim else float(out)


def init_weights(layer_sizes, seed):
    """Uniform in ``[-r, r]`` with ``r = sqrt(6 / (fan_in + fan_out))``."""
    rng = np.random.default_rng(seed)
    weights = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        r = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-r, r, size=(fan_out, fan_in + 1)))
    return weights


def init_model(layer_sizes, seed=42, hyper=None):
    return DnnModel(tuple(layer_sizes), tuple(init_weights(layer_sizes, seed)),
                    seed, hyper or Hyper())


def _with_bias(a):
    return np.hstack([np.ones((a.shape[0], 1)), a])


def forward(model: DnnModel, x):
    """Feed-forward pass.

    ``x`` is one input vector or a batch ``[m, n_in]``.  Returns the list of
    layer activations (input first) and the output layer.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    a = np.atleast_2d(x)
    if a.shape[1] != model.n_inputs:
        raise DimensionError(f"expected {model.n_inputs} inputs, got {a.shape[1]}")
    activations = [a]
    for w in model.weights:
        a = sigmoid(_with_bias(a) @ w.T)
        activations.append(a)
    if single:
        activations = [act[0] for act in activations]
    return activations, activations[-1]


def one_hot(labels, n_classes):
    labels = np.asarray(labels, dtype=int)
    y = np.zeros((labels.size, n_classes))
    y[np.arange(labels.size), labels] = 1.0
    return y


def _penalty(model):
    return sum(float(np.sum(w[:, 1:] ** 2)) for w in model.weights)


def cost(model: DnnModel, X, Y):
    """Mean one-vs-all cross-entropy plus ``(l2 / 2m) * sum(W**2)`` (biases excluded)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    m = X.shape[0]
    _, h = forward(model, X)
    h = np.clip(h, COST_CLAMP, 1.0 - COST_CLAMP)
    j = -np.sum(Y * np.log(h) + (1.0 - Y) * np.log(1.0 - h)) / m
    if model.hyper.l2:
        j += model.hyper.l2 / (2.0 * m) * _penalty(model)
    return float(j)


def backprop(model: DnnModel, X, Y):
    """Gradient of :func:`cost` with respect to every weight matrix."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    m = X.shape[0]
    acts, out = forward(model, X)
    if Y.shape != out.shape:
        raise DimensionError(f"targets have shape {Y.shape}, outputs {out.shape}")
    lam = model.hyper.l2
    grads = [None] * len(model.weights)
    delta = out - Y
    for i in range(len(model.weights) - 1, -1, -1):
        w = model.weights[i]
        g = delta.T @ _with_bias(acts[i]) / m
        if lam:
            g[:, 1:] += lam / m * w[:, 1:]
        grads[i] = g
        if i > 0:
            a = acts[i]
            delta = (delta @ w[:, 1:]) * a * (1.0 - a)
    return grads


def train(X, Y, layer_sizes=None, hyper=None, seed=42, checkpoint_every=None):
    """Full-batch gradient descent from a seeded initialisation.

    ``Y`` may be one-hot ``[m, K]`` or a vector of class ids.  Without
    ``layer_sizes`` the net is ``[n_in, 15, 15, 15, K]``.
    """
    hyper = hyper or Hyper()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y)
    if Y.ndim == 1:
        k = layer_sizes[-1] if layer_sizes else int(Y.max()) + 1
        Y = one_hot(Y, k)
    Y = Y.astype(float)
    if layer_sizes is None:
        layer_sizes = (X.shape[1],) + DEFAULT_HIDDEN + (Y.shape[1],)
    layer_sizes = tuple(layer_sizes)
    if X.shape[1] != layer_sizes[0] or Y.shape[1] != layer_sizes[-1]:
        raise DimensionError(f"data shapes {X.shape}/{Y.shape} do not fit layers {layer_sizes}")
    model = init_model(layer_sizes, seed, hyper)
    trace = TrainTrace(cost(model, X, Y))
    if not np.isfinite(trace.initial_cost):
        raise TrainingDiverged(0, trace.initial_cost)
    truth = np.argmax(Y, axis=1)
    weights = list(model.weights)
    for it in range(1, hyper.iterations + 1):
        grads = backprop(model, X, Y)
        weights = [w - hyper.learning_rate * g for w, g in zip(weights, grads)]
        if not all(np.all(np.isfinite(w)) for w in weights):
            raise TrainingDiverged(it, float("nan"))
        model = model.with_weights(weights)
        j = cost(model, X, Y)
        if not np.isfinite(j):
            raise TrainingDiverged(it, j)
        trace.cost_per_iteration.append(j)
        if checkpoint_every and it % checkpoint_every == 0:
            acc = float(np.mean(predict_batch(model, X) == truth))
            trace.accuracy_per_checkpoint.append((it, acc))
    log.debug("trained %s for %d iterations, final cost %.6g", layer_sizes,
              hyper.iterations, trace.cost_per_iteration[-1] if trace.cost_per_iteration
              else trace.initial_cost)
    return model, trace


def predict(model: DnnModel, x):
    """Class with the largest output (lowest id on ties) and the output vector."""
    _, out = forward(model, np.asarray(x, dtype=float).ravel())
    return int(np.argmax(out)), out


def predict_batch(model: DnnModel, X):
    _, out = forward(model, np.atleast_2d(X))
    return np.argmax(out, axis=1)
