"""Synthetic gesture recordings that follow the stimulus/rest protocol.

Each class owns one motif per channel: a raised-cosine windowed sum of one to
three sinusoid bursts between 1 and 3 Hz.  Motifs depend only on the seed, so
every subject generated with the same seed performs the same gestures; a
subject differs by a per-channel gain ``1 + jitter * N(0, 1)`` and by its own
noise.  ``noise_sigma`` is relative to the RMS of all motifs.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .signal_io import DEFAULT_SAMPLE_RATE, Protocol, Recording, default_channels


@dataclass(frozen=True)
class SynthSpec:
    n_classes: int = 6
    protocol: Protocol = field(default_factory=Protocol)
    sample_rate: float = DEFAULT_SAMPLE_RATE
    n_sensors: int = 3
    modality: str = "both"
    noise_sigma: float = 0.3
    subject_jitter: float = 0.1
    seed: int = 42

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValueError("n_classes must be >= 2")
        if self.noise_sigma < 0 or self.subject_jitter < 0:
            raise ValueError("noise_sigma and subject_jitter must be >= 0")
        if self.sample_rate <= 0 or self.n_sensors < 1:
            raise ValueError("sample_rate and n_sensors must be positive")

    @property
    def channels(self):
        return default_channels(self.n_sensors, self.modality)


def class_motifs(spec: SynthSpec):
    """Array ``[K, w, n_channels]`` of noiseless gesture windows."""
    w = spec.protocol.window_length(spec.sample_rate)
    t = np.arange(w) / spec.sample_rate
    envelope = 0.5 - 0.5 * np.cos(2 * np.pi * (np.arange(w) + 0.5) / w)
    n_ch = len(spec.channels)
    rng = np.random.default_rng([spec.seed, 0x6D6F])
    motifs = np.zeros((spec.n_classes, w, n_ch))
    for c in range(spec.n_classes):
        for j in range(n_ch):
            for _ in range(rng.integers(1, 4)):
                freq = rng.uniform(1.0, 3.0)
                amp = rng.uniform(0.5, 2.0)
                phase = rng.uniform(0.0, 2 * np.pi)
                motifs[c, :, j] += amp * np.sin(2 * np.pi * freq * t + phase)
    return motifs * envelope[None, :, None]


def _subject_rng(spec, subject_id):
    return np.random.default_rng([spec.seed, zlib.crc32(str(subject_id).encode("utf-8"))])


def generate_recording(spec: SynthSpec, subject_id="subject1"):
    """Continuous recording for one subject plus its per-window labels.

    Labels are a seeded shuffle of ``repetitions`` copies of every class.
    """
    proto = spec.protocol
    fs = spec.sample_rate
    motifs = class_motifs(spec)
    motif_rms = float(np.sqrt(np.mean(motifs ** 2)))
    sigma = spec.noise_sigma * motif_rms
    n_windows = spec.n_classes * proto.repetitions
    w = motifs.shape[1]
    n = proto.recording_length(n_windows, fs)

    rng = _subject_rng(spec, subject_id)
    gains = 1.0 + spec.subject_jitter * rng.standard_normal(motifs.shape[2])
    labels = rng.permutation(np.repeat(np.arange(spec.n_classes), proto.repetitions))
    samples = sigma * rng.standard_normal((n, motifs.shape[2])) if sigma > 0 \
        else np.zeros((n, motifs.shape[2]))
    for i, c in enumerate(labels):
        start = proto.window_start(i, fs)
        samples[start:start + w] += motifs[c] * gains
    rec = Recording(fs, spec.channels, samples, str(subject_id), spec.modality)
    return rec, [int(c) for c in labels]
