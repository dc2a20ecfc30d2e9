"""Windowing, frequency-band decomposition and differential-entropy features.

A recording (channels x samples) is cut into fixed-length windows, each
window is decomposed into the five classic EEG rhythms, and the
differential entropy of each band-limited channel becomes one feature:
64 channels x 5 bands = 320 DE values per window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import BandError, NumericError, WindowError

# Variance is clamped here before the log so flat channels give a large
# negative DE instead of -inf.
VARIANCE_FLOOR = 1e-12


class Label(IntEnum):
    """Attended-speaker direction. The integer values are the class
    indices used everywhere (classifier outputs, container files)."""

    LEFT = 0
    RIGHT = 1


@dataclass(frozen=True)
class Band:
    """One frequency band, half-open nowhere: bins with lo <= f <= hi are kept."""

    name: str
    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 < self.lo < self.hi):
            raise BandError(f"band {self.name}: need 0 < lo < hi, got [{self.lo}, {self.hi}]")


DEFAULT_BANDS = (
    Band("delta", 1.0, 3.0),
    Band("theta", 4.0, 7.0),
    Band("alpha", 8.0, 13.0),
    Band("beta", 14.0, 30.0),
    Band("gamma", 31.0, 50.0),
)


@dataclass
class EegRecording:
    """One trial: channel-major samples plus the attended direction."""

    samples: np.ndarray  # (n_channels, n_samples)
    sample_rate: float
    label: Label
    subject_id: str = ""
    trial_id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2 or self.samples.shape[0] < 1 or self.samples.shape[1] < 1:
            raise WindowError(f"recording needs a (channels, samples) matrix, got shape {self.samples.shape}")
        if self.sample_rate <= 0:
            raise WindowError(f"sample rate must be positive, got {self.sample_rate}")
        if not np.isfinite(self.samples).all():
            raise NumericError(f"recording {self.subject_id}/{self.trial_id} contains non-finite samples")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]


@dataclass
class EegWindow:
    """One fixed-length segment of a recording."""

    samples: np.ndarray  # (n_channels, window_samples)
    sample_rate: float
    label: Label
    origin: tuple = ("", "", 0)  # (subject_id, trial_id, start sample)


@dataclass
class DeFeatureMatrix:
    """Node-feature matrix: one DE value per (channel, band)."""

    values: np.ndarray  # (n_channels, n_bands)
    label: Label
    origin: tuple = field(default=("", "", 0))


def slide_windows(rec: EegRecording, window_seconds: float,
                  hop_seconds: float | None = None) -> list[EegWindow]:
    """Cut a recording into windows starting at 0, hop, 2*hop, ...

    The default hop equals the window length (non-overlapping). Overlap is
    allowed but leaks correlated samples across a later random split, so
    enable it deliberately.
    """
    if hop_seconds is None:
        hop_seconds = window_seconds
    if window_seconds <= 0 or hop_seconds <= 0:
        raise WindowError(f"window and hop must be positive, got {window_seconds}, {hop_seconds}")
    length = round(window_seconds * rec.sample_rate)
    hop = round(hop_seconds * rec.sample_rate)
    if length < 1 or hop < 1:
        raise WindowError(f"window/hop shorter than one sample at {rec.sample_rate} Hz")
    total = rec.n_samples
    if total < length:
        raise WindowError(
            f"recording {rec.subject_id}/{rec.trial_id} has {total} samples, "
            f"shorter than one {length}-sample window")
    count = (total - length) // hop + 1
    return [
        EegWindow(
            samples=rec.samples[:, i * hop:i * hop + length].copy(),
            sample_rate=rec.sample_rate,
            label=rec.label,
            origin=(rec.subject_id, rec.trial_id, i * hop),
        )
        for i in range(count)
    ]


def bandpass(window: EegWindow, band: Band) -> EegWindow:
    """FFT-mask band-pass: zero every rFFT bin with frequency outside
    [lo, hi], inverse-transform. Deterministic and phase-exact."""
    if band.hi > window.sample_rate / 2:
        raise BandError(
            f"band {band.name} [{band.lo}, {band.hi}] Hz exceeds Nyquist "
            f"({window.sample_rate / 2} Hz)")
    x = window.samples
    spectrum = np.fft.rfft(x, axis=1)
    freqs = np.fft.rfftfreq(x.shape[1], d=1.0 / window.sample_rate)
    spectrum[:, (freqs < band.lo) | (freqs > band.hi)] = 0.0
    filtered = np.fft.irfft(spectrum, n=x.shape[1], axis=1)
    return EegWindow(filtered, window.sample_rate, window.label, window.origin)


def differential_entropy(window: EegWindow) -> np.ndarray:
    """Per-channel DE: h = 0.5 * ln(2*pi*e*var), the closed form for a
    Gaussian band-limited signal. Population variance (divide by L)."""
    if window.samples.shape[1] < 2:
        raise WindowError("differential entropy needs at least 2 samples per channel")
    var = window.samples.var(axis=1)
    var = np.maximum(var, VARIANCE_FLOOR)
    return 0.5 * np.log(2.0 * math.pi * math.e * var)


def extract_features(window: EegWindow, bands=DEFAULT_BANDS) -> DeFeatureMatrix:
    """DE of every (channel, band) pair: the model's node features."""
    if not bands:
        raise BandError("at least one band is required")
    values = np.stack(
        [differential_entropy(bandpass(window, band)) for band in bands], axis=1)
    return DeFeatureMatrix(values=values, label=window.label, origin=window.origin)


def znorm_trial(rec: EegRecording) -> EegRecording:
    """Per-channel z-normalization (zero mean, unit variance); constant
    channels become all-zero."""
    if rec.n_samples < 2:
        raise WindowError("z-normalization needs at least 2 samples")
    mean = rec.samples.mean(axis=1, keepdims=True)
    std = rec.samples.std(axis=1, keepdims=True)
    centered = rec.samples - mean
    out = np.divide(centered, std, out=np.zeros_like(centered), where=std > 0)
    return EegRecording(out, rec.sample_rate, rec.label, rec.subject_id, rec.trial_id)
