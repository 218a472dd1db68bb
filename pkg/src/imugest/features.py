"""Ten time-domain features per channel.

Conventions used throughout:

* standard deviation and variance use the ``n - 1`` denominator;
* skewness and kurtosis use ``1/n`` moment sums over that ``n - 1`` sigma;
* MAV is the absolute value of the mean, ``|mean(x)|`` (not ``mean(|x|)``
  as in most EMG work);
* mobility is ``var(diff(x)) / var(x)`` without the square root of the
  classical Hjorth definition;
* AR coefficients follow ``x_hat[n] = sum_k a_k x[n-k]`` and are estimated by
  Levinson-Durbin on the biased autocorrelation of the de-meaned signal.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FeatureError, ParseError, SchemaError

DEFAULT_AR_ORDER = 4


def _vec(x, min_len, name):
    x = np.asarray(x, dtype=float).ravel()
    if x.size < min_len:
        if x.size == 0:
            raise FeatureError(f"{name}: empty input")
        raise FeatureError(f"{name}: needs at least {min_len} samples, got {x.size}")
    return x


def f_mean(x):
    x = _vec(x, 1, "mean")
    return float(np.sum(x) / x.size)


def f_mav(x):
    return abs(f_mean(_vec(x, 1, "mav")))


def f_var(x):
    x = _vec(x, 2, "var")
    d = x - np.sum(x) / x.size
    return float(np.dot(d, d) / (x.size - 1))


def f_std(x):
    return float(np.sqrt(f_var(_vec(x, 2, "std"))))


def f_rms(x):
    x = _vec(x, 1, "rms")
    return float(np.sqrt(np.dot(x, x) / x.size))


def f_wl(x):
    x = _vec(x, 2, "wl")
    return float(np.sum(np.abs(np.diff(x))))


def _standardized_moment(x, order, name):
    x = _vec(x, 2, name)
    sigma = f_std(x)
    if not sigma > 0:
        raise FeatureError(f"{name}: zero standard deviation")
    d = x - np.sum(x) / x.size
    return float(np.sum(d ** order) / x.size / sigma ** order)


def f_skew(x):
    return _standardized_moment(x, 3, "skew")


def f_kurtosis(x):
    return _standardized_moment(x, 4, "kurtosis")


def f_mobility(x):
    x = _vec(x, 3, "mobility")
    v = f_var(x)
    if not v > 0:
        raise FeatureError("mobility: zero variance")
    return f_var(np.diff(x)) / v


def autocorrelation(x, max_lag):
    """Biased autocorrelation ``r[k] = (1/n) sum_t d[t] d[t+k]`` of the de-meaned signal."""
    d = x - x.mean()
    n = d.size
    return np.array([np.dot(d[:n - k], d[k:]) / n for k in range(max_lag + 1)])


def levinson_durbin(r, order):
    """Solve the Yule-Walker equations for a Toeplitz autocorrelation.

    Returns ``(a, err)`` where ``a[k-1]`` is the lag-k prediction
    coefficient and ``err`` the final prediction-error power.
    """
    r = np.asarray(r, dtype=float)
    if r[0] <= 0:
        raise FeatureError("ar: zero signal power")
    a = np.zeros(order)
    err = r[0]
    for i in range(order):
        acc = r[i + 1] - np.dot(a[:i], r[i:0:-1])
        k = acc / err
        prev = a[:i].copy()
        a[:i] = prev - k * prev[::-1]
        a[i] = k
        err *= 1.0 - k * k
        if err <= 0:
            raise FeatureError(f"ar: singular autocorrelation at order {i + 1}")
    return a, err


def f_ar(x, p=DEFAULT_AR_ORDER):
    if p < 1:
        raise FeatureError("ar: order must be >= 1")
    x = _vec(x, p + 1, "ar")
    if np.ptp(x) == 0:
        raise FeatureError("ar: constant signal")
    a, _ = levinson_durbin(autocorrelation(x, p), p)
    return a


FEATURE_ORDER = ("mean", "mav", "std", "rms", "var", "wl", "ar", "skew", "mobility", "kurtosis")

_SCALAR = {
    "mean": f_mean, "mav": f_mav, "std": f_std, "rms": f_rms, "var": f_var,
    "wl": f_wl, "skew": f_skew, "mobility": f_mobility, "kurtosis": f_kurtosis,
}


def feature_names(channels, p=DEFAULT_AR_ORDER):
    names = []
    for ch in channels:
        for feat in FEATURE_ORDER:
            if feat == "ar":
                names += [f"{ch}.ar.{k}" for k in range(1, p + 1)]
            else:
                names.append(f"{ch}.{feat}")
    return names


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    names: tuple


def channel_features(x, p=DEFAULT_AR_ORDER):
    out = []
    for feat in FEATURE_ORDER:
        if feat == "ar":
            out.extend(f_ar(x, p))
        else:
            out.append(_SCALAR[feat](x))
    return out


def segment_features(segment, p=DEFAULT_AR_ORDER):
    values = []
    for j, ch in enumerate(segment.channels):
        try:
            values.extend(channel_features(segment.samples[:, j], p))
        except FeatureError as exc:
            raise FeatureError(f"segment {segment.subject_id}#{segment.index}, "
                               f"channel {ch}: {exc}") from exc
    values = np.array(values)
    if not np.all(np.isfinite(values)):
        raise FeatureError(f"segment {segment.subject_id}#{segment.index}: non-finite feature")
    return FeatureVector(values, tuple(feature_names(segment.channels, p)))


@dataclass(frozen=True)
class FeatureMatrix:
    """Rows are segments, columns are named features."""

    values: np.ndarray = field(repr=False)
    labels: np.ndarray
    column_names: tuple

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, len(self.column_names))
        labels = np.array(self.labels, dtype=int).ravel()
        names = tuple(self.column_names)
        if values.shape[1] != len(names):
            raise SchemaError(f"{values.shape[1]} columns but {len(names)} names")
        if labels.size != values.shape[0]:
            raise SchemaError(f"{labels.size} labels for {values.shape[0]} rows")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "column_names", names)

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_columns(self):
        return self.values.shape[1]

    def rows(self):
        return [FeatureVector(v, self.column_names) for v in self.values]

    def take(self, idx):
        idx = np.asarray(idx, dtype=int)
        return FeatureMatrix(self.values[idx], self.labels[idx], self.column_names)

    @classmethod
    def concat(cls, parts):
        parts = list(parts)
        names = parts[0].column_names
        if any(p.column_names != names for p in parts):
            raise SchemaError("cannot concatenate matrices with different columns")
        return cls(np.vstack([p.values for p in parts]),
                   np.concatenate([p.labels for p in parts]), names)


def extract_features(segments, p=DEFAULT_AR_ORDER):
    """Feature matrix with one row per segment, in segment order.

    Per channel the columns are ``mean, mav, std, rms, var, wl, ar.1..ar.p,
    skew, mobility, kurtosis`` (``9 + p`` columns).
    """
    segments = list(segments)
    if not segments:
        raise FeatureError("no segments")
    channels = segments[0].channels
    for s in segments:
        if s.channels != channels:
            raise SchemaError(f"segment {s.subject_id}#{s.index} has a different channel set")
    rows = [segment_features(s, p).values for s in segments]
    return FeatureMatrix(np.vstack(rows), [s.label for s in segments],
                         feature_names(channels, p))


def save_matrix(fm: FeatureMatrix, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(fm.column_names) + ["label"])
        for row, lab in zip(fm.values, fm.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(lab)])


def load_matrix(path):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if not header or header[-1] != "label":
            raise SchemaError(f"{path}: last column must be 'label'")
        values, labels = [], []
        for lineno, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: row {lineno} has {len(row)} cells", row=lineno)
            try:
                values.append([float(c) for c in row[:-1]])
                labels.append(int(row[-1]))
            except ValueError:
                raise ParseError(f"{path}: non-numeric cell in row {lineno}", row=lineno) from None
    names = header[:-1]
    return FeatureMatrix(np.array(values, dtype=float).reshape(len(values), len(names)),
                         np.array(labels, dtype=int), names)
