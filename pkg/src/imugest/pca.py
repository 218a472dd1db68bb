"""Principal component analysis on the feature matrix.

The covariance eigendecomposition is done with cyclic Jacobi rotations.  The
sweep uses round-robin ordering: every round rotates ``d/2`` disjoint index
pairs, which commute, so a whole round is applied with a few vectorized row
and column updates.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, PcaError
from .features import FeatureMatrix

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
DEFAULT_COMPONENTS = 10


def _round_robin(n):
    """Yield lists of disjoint (p, q) pairs covering every pair once per sweep."""
    players = list(range(n + (n % 2)))
    size = len(players)
    for _ in range(size - 1):
        pairs = []
        for i in range(size // 2):
            p, q = players[i], players[size - 1 - i]
            if p < n and q < n:
                pairs.append((min(p, q), max(p, q)))
        yield pairs
        players = [players[0], players[-1]] + players[1:-1]


def _off_norm(a):
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def jacobi_eigh(a, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigen-decompose a symmetric matrix.

    Returns ``(eigenvalues, eigenvectors, sweeps)`` with eigenvalues sorted
    descending and eigenvectors as columns.  Iterates until the off-diagonal
    Frobenius norm drops below ``tol * ||a||_F``.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise PcaError("jacobi_eigh needs a square matrix")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise PcaError("jacobi_eigh needs a symmetric matrix")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    scale = float(np.linalg.norm(a))
    sweeps = 0
    rounds = list(_round_robin(n))
    while sweeps < max_sweeps and _off_norm(a) > tol * scale:
        sweeps += 1
        for pairs in rounds:
            if not pairs:
                continue
            p = np.array([pq[0] for pq in pairs])
            q = np.array([pq[1] for pq in pairs])
            apq = a[p, q]
            active = apq != 0.0
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # A <- J^T A J with J[p,p]=J[q,q]=c, J[p,q]=s, J[q,p]=-s
            ap, aq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = c * ap - s * aq
            a[:, q] = s * ap + c * aq
            ap, aq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * ap - s[:, None] * aq
            a[q, :] = s[:, None] * ap + c[:, None] * aq
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
    if _off_norm(a) > tol * scale:
        raise PcaError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order], sweeps


def _fix_signs(vectors):
    out = vectors.copy()
    for k in range(out.shape[1]):
        j = int(np.argmax(np.abs(out[:, k])))
        if out[j, k] < 0:
            out[:, k] = -out[:, k]
    return out


@dataclass(frozen=True)
class PcaModel:
    column_means: np.ndarray = field(repr=False)
    column_scales: np.ndarray = field(repr=False)
    components: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray
    column_names: tuple = field(default=(), repr=False)
    standardize: bool = True

    @property
    def d(self):
        return self.components.shape[0]

    @property
    def l(self):
        return self.components.shape[1]

    @property
    def output_names(self):
        return tuple(f"F_{k}" for k in range(1, self.l + 1))

    def truncate(self, l):
        if not 1 <= l <= self.l:
            raise PcaError(f"cannot truncate {self.l} components to {l}")
        return PcaModel(self.column_means, self.column_scales, self.components[:, :l],
                        self.eigenvalues[:l], self.column_names, self.standardize)

    def to_dict(self):
        return {
            "kind": "pca",
            "d": self.d,
            "l": self.l,
            "standardize": self.standardize,
            "column_names": list(self.column_names),
            "column_means": self.column_means.tolist(),
            "column_scales": self.column_scales.tolist(),
            "components": self.components.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
        }

    @classmethod
    def from_dict(cls, doc):
        comps = np.array(doc["components"], dtype=float).reshape(doc["d"], doc["l"])
        return cls(np.array(doc["column_means"], dtype=float),
                   np.array(doc["column_scales"], dtype=float),
                   comps, np.array(doc["eigenvalues"], dtype=float),
                   tuple(doc.get("column_names", ())), bool(doc["standardize"]))


def fit_pca(fm: FeatureMatrix, l=DEFAULT_COMPONENTS, standardize=True):
    """Fit the top-``l`` principal axes of the (optionally z-scored) covariance."""
    x = fm.values
    m, d = x.shape
    if m < 2:
        raise PcaError("PCA needs at least 2 rows")
    if not 1 <= l <= min(d, m - 1):
        raise PcaError(f"l={l} outside [1, {min(d, m - 1)}]")
    means = x.mean(axis=0)
    centered = x - means
    if standardize:
        scales = np.sqrt(np.sum(centered ** 2, axis=0) / (m - 1))
        zero = np.flatnonzero(scales == 0)
        if zero.size:
            name = fm.column_names[zero[0]] if fm.column_names else str(zero[0])
            raise PcaError(f"column {name!r} has zero variance; cannot standardize")
        centered = centered / scales
    else:
        scales = np.ones(d)
    cov = centered.T @ centered / (m - 1)
    w, v, _ = jacobi_eigh(cov)
    v = _fix_signs(v[:, :l])
    return PcaModel(means, scales, v, w[:l], tuple(fm.column_names), bool(standardize))


def project(model: PcaModel, x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.d:
        raise DimensionError(f"expected {model.d} features, got {x.shape[1]}")
    return ((x - model.column_means) / model.column_scales) @ model.components


def transform(model: PcaModel, fm: FeatureMatrix):
    """Project rows onto the components; output columns are ``F_1 .. F_l``."""
    if fm.n_columns != model.d:
        raise DimensionError(f"matrix has {fm.n_columns} columns, model expects {model.d}")
    return FeatureMatrix(project(model, fm.values), fm.labels, model.output_names)


def inverse_transform(model: PcaModel, z):
    """Map projected rows back to the original feature space."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    return (z @ model.components.T) * model.column_scales + model.column_means
