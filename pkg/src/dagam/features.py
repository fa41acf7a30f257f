"""Differential-entropy features from multichannel recordings.

Preprocessing follows the usual EEG recipe: integer-factor downsampling to
the working rate with frequency-domain anti-aliasing, a wide band limit,
then per-window, per-band differential entropy under a Gaussian model:
DE = 0.5 * ln(2 * pi * e * var). Band isolation is DFT masking, chosen so
analytic sinusoids are exact test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, DegenerateInputError

# Default analysis bands in Hz: delta, theta, alpha, beta, gamma.
DEFAULT_BANDS = ((1.0, 4.0), (4.0, 8.0), (8.0, 14.0), (14.0, 31.0), (31.0, 50.0))

DEFAULT_WINDOW_SECONDS = 1.0

# Sample-variance floor; keeps DE finite on constant windows.
VARIANCE_FLOOR = 1e-8


@dataclass
class Recording:
    """A multichannel signal (channels x time) with its provenance."""

    samples: np.ndarray
    rate: float
    subject: str
    trial: int
    label: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2:
            raise DataError(f"samples must be channels x time, got shape {self.samples.shape}")
        if self.rate <= 0:
            raise DataError(f"sampling rate must be positive, got {self.rate}")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]


@dataclass
class FeatureSample:
    """One analysis window: node features (channels x bands), label, subject."""

    x: np.ndarray
    label: int
    subject: str


def downsample(rec: Recording, target: float) -> Recording:
    """Integer-factor decimation after zeroing content above the new Nyquist."""
    ratio = rec.rate / target
    factor = int(round(ratio))
    if factor < 1 or abs(ratio - factor) > 1e-9:
        raise ConfigError(f"rate {rec.rate} is not an integer multiple of target {target}")
    if factor == 1:
        return Recording(rec.samples.copy(), target, rec.subject, rec.trial, rec.label)
    n = rec.n_samples
    spectrum = np.fft.rfft(rec.samples, axis=-1)
    freqs = np.fft.rfftfreq(n, d=1.0 / rec.rate)
    spectrum[..., freqs >= target / 2.0] = 0.0
    filtered = np.fft.irfft(spectrum, n=n, axis=-1)
    out_len = int(n * target // rec.rate)
    decimated = filtered[..., ::factor][..., :out_len]
    return Recording(decimated, target, rec.subject, rec.trial, rec.label)


def band_isolate(signal: np.ndarray, lo: float, hi: float, rate: float) -> np.ndarray:
    """Keep only DFT bins with frequency in [lo, hi]; length is preserved.

    Works along the last axis, so a (channels, time) block is isolated in
    one call. Idempotent: reapplying the same band is a no-op up to
    round-trip rounding.
    """
    if lo < 0 or lo >= hi:
        raise ConfigError(f"band [{lo}, {hi}] is not a valid frequency range")
    if hi > rate / 2.0:
        raise ConfigError(f"band edge {hi} Hz exceeds the Nyquist frequency {rate / 2.0} Hz")
    signal = np.asarray(signal, dtype=np.float64)
    n = signal.shape[-1]
    spectrum = np.fft.rfft(signal, axis=-1)
    freqs = np.fft.rfftfreq(n, d=1.0 / rate)
    spectrum[..., (freqs < lo) | (freqs > hi)] = 0.0
    return np.fft.irfft(spectrum, n=n, axis=-1)


def _gaussian_entropy(variance: np.ndarray) -> np.ndarray:
    return 0.5 * np.log(2.0 * np.pi * np.e * np.maximum(variance, VARIANCE_FLOOR))


def differential_entropy(window: np.ndarray) -> float:
    """0.5 * ln(2*pi*e * sample variance), variance floored at VARIANCE_FLOOR.

    The variance is the unbiased estimate, so the window needs at least
    two samples.
    """
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 1:
        raise DegenerateInputError(f"expected a 1-D window, got shape {window.shape}")
    if window.size < 2:
        raise DegenerateInputError(f"window of length {window.size} has no sample variance")
    return float(_gaussian_entropy(window.var(ddof=1)))


def extract_features(
    rec: Recording,
    bands=DEFAULT_BANDS,
    window_s: float = DEFAULT_WINDOW_SECONDS,
) -> list[FeatureSample]:
    """Per-window node-feature matrices of shape (channels, len(bands)).

    Each non-overlapping window is band-isolated and reduced to its
    differential entropy, channel by channel. The recording must already be
    at the working rate.
    """
    width = int(round(window_s * rec.rate))
    if width < 2:
        raise ConfigError(f"window of {window_s} s at {rec.rate} Hz has {width} samples; need >= 2")
    for lo, hi in bands:
        if hi > rec.rate / 2.0:
            raise ConfigError(f"band edge {hi} Hz exceeds Nyquist at rate {rec.rate} Hz")
    n_windows = rec.n_samples // width
    if n_windows == 0:
        raise DataError(
            f"recording of {rec.n_samples} samples is shorter than one {width}-sample window"
        )
    samples: list[FeatureSample] = []
    for w in range(n_windows):
        block = rec.samples[:, w * width : (w + 1) * width]
        x = np.empty((rec.n_channels, len(bands)))
        for b, (lo, hi) in enumerate(bands):
            isolated = band_isolate(block, lo, hi, rec.rate)
            x[:, b] = _gaussian_entropy(isolated.var(ddof=1, axis=-1))
        samples.append(FeatureSample(x, rec.label, rec.subject))
    return samples


def prepare_recording(
    rec: Recording,
    working_rate: float = 200.0,
    limit_band: tuple[float, float] = (1.0, 75.0),
) -> Recording:
    """Downsample to the working rate, then apply the wide band limit."""
    out = downsample(rec, working_rate) if rec.rate != working_rate else rec
    limited = band_isolate(out.samples, limit_band[0], limit_band[1], working_rate)
    return Recording(limited, working_rate, rec.subject, rec.trial, rec.label)
