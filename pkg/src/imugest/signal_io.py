"""Recording I/O and protocol-driven segmentation.

A recording is one continuous capture in which a subject performs every
gesture repetition back to back: a fixed acquisition delay, then alternating
stimulus windows (the gesture) and rest periods.  ``segment_recording`` cuts
the stimulus windows out by wall-clock timing alone; no filtering or
resampling is applied.
"""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ParseError, SchemaError, SegmentationError

DEFAULT_SAMPLE_RATE = 148.15

MODALITIES = ("accelerometer", "gyroscope", "both")

_ACCEL_RE = re.compile(r"_a[xyz]$")
_GYRO_RE = re.compile(r"_g[xyz]$")


def default_channels(n_sensors=3, modality="both"):
    """Channel names ``s1_ax .. s<n>_gz`` in sensor-major order."""
    axes = []
    if modality in ("accelerometer", "both"):
        axes += ["ax", "ay", "az"]
    if modality in ("gyroscope", "both"):
        axes += ["gx", "gy", "gz"]
    return [f"s{s}_{a}" for s in range(1, n_sensors + 1) for a in axes]


def channel_modality(name):
    if _ACCEL_RE.search(name):
        return "accelerometer"
    if _GYRO_RE.search(name):
        return "gyroscope"
    return None


def infer_modality(channels):
    kinds = {channel_modality(c) for c in channels}
    if kinds == {"accelerometer"}:
        return "accelerometer"
    if kinds == {"gyroscope"}:
        return "gyroscope"
    return "both"


def half_up(x):
    """Round to nearest integer, halves away from zero (no banker's rounding)."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


@dataclass(frozen=True)
class Recording:
    sample_rate: float
    channels: tuple
    samples: np.ndarray = field(repr=False)
    subject_id: str = ""
    modality: str = "both"

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 2:
            raise SchemaError("samples must be a 2-D [n_samples x n_channels] matrix")
        channels = tuple(self.channels)
        if samples.shape[0] < 1:
            raise ParseError("no samples")
        if samples.shape[1] != len(channels):
            raise SchemaError(f"{samples.shape[1]} sample columns for {len(channels)} channels")
        if len(set(channels)) != len(channels):
            raise SchemaError("channel names must be unique")
        if not self.sample_rate > 0:
            raise SchemaError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.modality not in MODALITIES:
            raise SchemaError(f"unknown modality {self.modality!r}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    @property
    def n_samples(self):
        return self.samples.shape[0]

    @property
    def n_channels(self):
        return self.samples.shape[1]

    def select(self, modality):
        """Sub-recording holding only ``accelerometer`` or ``gyroscope`` channels."""
        if modality == "both":
            return self
        idx = [i for i, c in enumerate(self.channels) if channel_modality(c) == modality]
        if not idx:
            raise SchemaError(f"recording has no {modality} channels")
        return Recording(self.sample_rate, [self.channels[i] for i in idx],
                         self.samples[:, idx], self.subject_id, modality)


@dataclass(frozen=True)
class Protocol:
    stimulus_duration: float = 3.0
    rest_duration: float = 5.0
    hardware_delay: float = 0.5
    repetitions: int = 20

    def __post_init__(self):
        for name in ("stimulus_duration", "rest_duration", "hardware_delay"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")

    def window_length(self, sample_rate):
        return half_up(self.stimulus_duration * sample_rate)

    def window_start(self, i, sample_rate):
        period = self.stimulus_duration + self.rest_duration
        return half_up((self.hardware_delay + i * period) * sample_rate)

    def recording_length(self, n_windows, sample_rate):
        """Smallest sample count that holds ``n_windows`` complete windows."""
        last = self.window_start(n_windows - 1, sample_rate) + self.window_length(sample_rate)
        period = self.stimulus_duration + self.rest_duration
        nominal = half_up((self.hardware_delay + n_windows * period - self.rest_duration)
                          * sample_rate)
        return max(last, nominal)


@dataclass(frozen=True)
class Segment:
    samples: np.ndarray = field(repr=False)
    label: int
    channels: tuple
    subject_id: str = ""
    index: int = 0


def load_recording(path, schema=None, sample_rate=DEFAULT_SAMPLE_RATE,
                   subject_id=None, modality=None):
    """Read a recording CSV.

    The header holds channel names, optionally preceded by a ``t`` column
    that is dropped.  With ``schema`` given, the header must name exactly
    those channels (in any order); the returned samples follow file order.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        has_t = bool(header) and header[0] == "t"
        channels = header[1:] if has_t else header
        if schema is not None:
            missing = [c for c in schema if c not in channels]
            extra = [c for c in channels if c not in schema]
            if missing or extra:
                raise SchemaError(f"{path}: missing columns {missing}, unexpected columns {extra}")
        rows = []
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: data row {lineno} has {len(row)} cells, "
                                 f"expected {len(header)}", row=lineno)
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                raise ParseError(f"{path}: non-numeric cell in data row {lineno}",
                                 row=lineno) from None
            rows.append(values[1:] if has_t else values)
    if not rows:
        raise ParseError(f"{path}: no samples")
    return Recording(sample_rate, channels, np.array(rows, dtype=float),
                     subject_id if subject_id is not None else path.stem,
                     modality or infer_modality(channels))


def save_recording(rec: Recording, path, with_time=True):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow((["t"] if with_time else []) + list(rec.channels))
        for i, row in enumerate(rec.samples):
            cells = [repr(float(v)) for v in row]
            if with_time:
                cells.insert(0, repr(i / rec.sample_rate))
            writer.writerow(cells)


def load_labels(path):
    """Read a ``repetition_index,label`` file; returns labels ordered by index."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != {"repetition_index", "label"}:
            raise SchemaError(f"{path}: expected columns repetition_index,label")
        pairs = []
        for lineno, row in enumerate(reader, start=1):
            try:
                pairs.append((int(row["repetition_index"]), int(row["label"])))
            except (TypeError, ValueError):
                raise ParseError(f"{path}: bad integer in row {lineno}", row=lineno) from None
    pairs.sort()
    if [i for i, _ in pairs] != list(range(len(pairs))):
        raise ParseError(f"{path}: repetition indices must be 0..{len(pairs) - 1}")
    labels = [lab for _, lab in pairs]
    if any(lab < 0 for lab in labels):
        raise ParseError(f"{path}: labels must be non-negative")
    return labels


def save_labels(labels: Sequence[int], path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["repetition_index", "label"])
        for i, lab in enumerate(labels):
            writer.writerow([i, int(lab)])


def segment_recording(rec: Recording, proto: Protocol, labels: Sequence[int]):
    """Cut one window per label out of ``rec``.

    Window ``i`` starts at ``round((delay + i*(stimulus + rest)) * fs)`` and
    spans ``round(stimulus * fs)`` samples.  The delay is applied once, at
    the start of the recording.
    """
    fs = rec.sample_rate
    w = proto.window_length(fs)
    if w < 1:
        raise SegmentationError("stimulus window is shorter than one sample")
    segments = []
    for i, label in enumerate(labels):
        start = proto.window_start(i, fs)
        if start + w > rec.n_samples:
            raise SegmentationError(
                f"recording too short: window {i} needs samples [{start}, {start + w}) "
                f"but only {rec.n_samples} are available", window_index=i)
        window = rec.samples[start:start + w]
        segments.append(Segment(window, int(label), rec.channels, rec.subject_id, i))
    return segments
