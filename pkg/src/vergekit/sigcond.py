"""Deterministic signal conditioning for raw two-channel EOG.

The chain applied to a recording before any gating or detection is a
third-order zero-phase Butterworth low-pass (10 Hz default) followed by a
powerline notch (60 Hz default). Polynomial smoothing (Savitzky-Golay) is
exposed here too but is applied later, per analysis window, by the gesture
stage. All filters are stateless pure transforms of float64 millivolt
samples; zero phase is realized by running the causal filter forward and
backward with even (reflective) edge padding of three times the filter
order.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import signal as sps


@dataclass(frozen=True)
class FilterSpec:
    """Conditioning-chain parameters. Defaults: 3rd order low-pass at
    10 Hz, 60 Hz notch with Q=30 (about 2 Hz wide), Savitzky-Golay window
    251 samples (0.5 s at 500 Hz; the smoother needs an odd window) of
    order 3."""

    lowpass_order: int = 3
    lowpass_cutoff_hz: float = 10.0
    notch_freq_hz: float = 60.0
    notch_q: float = 30.0
    savgol_window: int = 251
    savgol_order: int = 3

    def __post_init__(self):
        if self.lowpass_order < 1:
            raise ValueError("lowpass_order must be >= 1")
        if not self.lowpass_cutoff_hz > 0:
            raise ValueError("lowpass_cutoff_hz must be positive")
        if not self.notch_freq_hz > 0:
            raise ValueError("notch_freq_hz must be positive")
        if not self.notch_q > 0:
            raise ValueError("notch_q must be positive")
        if self.savgol_window % 2 == 0:
            raise ValueError(
                f"savgol_window must be odd (a symmetric smoother needs a "
                f"centre sample); got {self.savgol_window}, use "
                f"{self.savgol_window + 1}"
            )
        if self.savgol_window <= self.savgol_order:
            raise ValueError("savgol_window must exceed savgol_order")


@dataclass(frozen=True)
class Recording:
    """A two-channel EOG trace in millivolts at a fixed sample rate.

    samples has shape (2, N), channel order (left, right). label_track is
    an optional per-sample annotation array of the same length.
    """

    samples: np.ndarray
    sample_rate: float = 500.0
    start_time: float = 0.0
    channel_names: tuple[str, str] = ("left", "right")
    label_track: np.ndarray | None = None

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.samples, dtype=np.float64))
        if arr.ndim != 2 or arr.shape[0] != 2:
            raise ValueError(f"samples must have shape (2, N), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", arr)
        if self.label_track is not None and len(self.label_track) != arr.shape[1]:
            raise ValueError("label_track length must match samples")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate

    @property
    def left(self) -> np.ndarray:
        return self.samples[0]

    @property
    def right(self) -> np.ndarray:
        return self.samples[1]

    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.n_samples) / self.sample_rate

    def with_samples(self, samples: np.ndarray) -> "Recording":
        return replace(self, samples=samples)


def _min_len(order: int) -> int:
    # filtfilt needs strictly more samples than the pad length of 3*order
    return 3 * order + 1


def lowpass_zero_phase(rec: Recording, spec: FilterSpec = FilterSpec()) -> Recording:
    """Zero-phase Butterworth low-pass, forward-backward. DC gain is 1 and
    the effective attenuation is the single-pass magnitude squared."""
    if spec.lowpass_cutoff_hz >= rec.sample_rate / 2:
        raise ValueError(
            f"lowpass cutoff {spec.lowpass_cutoff_hz} Hz must be below the "
            f"Nyquist frequency {rec.sample_rate / 2} Hz"
        )
    need = _min_len(spec.lowpass_order)
    if rec.n_samples < need:
        raise ValueError(
            f"recording too short for zero-phase filtering: {rec.n_samples} "
            f"samples, need at least {need}"
        )
    b, a = sps.butter(spec.lowpass_order, spec.lowpass_cutoff_hz, fs=rec.sample_rate)
    out = sps.filtfilt(b, a, rec.samples, axis=1, padtype="even", padlen=3 * spec.lowpass_order)
    return rec.with_samples(out)


def notch(rec: Recording, spec: FilterSpec = FilterSpec()) -> Recording:
    """Zero-phase powerline notch (second-order IIR)."""
    if spec.notch_freq_hz >= rec.sample_rate / 2:
        raise ValueError(
            f"notch frequency {spec.notch_freq_hz} Hz must be below the "
            f"Nyquist frequency {rec.sample_rate / 2} Hz"
        )
    need = _min_len(2)
    if rec.n_samples < need:
        raise ValueError(
            f"recording too short for zero-phase filtering: {rec.n_samples} "
            f"samples, need at least {need}"
        )
    b, a = sps.iirnotch(spec.notch_freq_hz, spec.notch_q, fs=rec.sample_rate)
    out = sps.filtfilt(b, a, rec.samples, axis=1, padtype="even", padlen=6)
    return rec.with_samples(out)


def savgol(x: np.ndarray, window: int = 251, order: int = 3) -> np.ndarray:
    """Savitzky-Golay smoothing of a 1-D (or row-wise 2-D) sample sequence.

    Least-squares polynomial smoothing: exact on polynomials of degree at
    most ``order``. The window must be odd; an even window has no centre
    sample to assign the fit to.
    """
    if window % 2 == 0:
        raise ValueError(
            f"window must be odd, got {window}; use {window + 1} (or {window - 1})"
        )
    if window <= order:
        raise ValueError(f"window ({window}) must exceed order ({order})")
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] < window:
        raise ValueError(
            f"signal length {x.shape[-1]} is shorter than the window {window}"
        )
    return sps.savgol_filter(x, window, order, axis=-1, mode="interp")


def condition(rec: Recording, spec: FilterSpec = FilterSpec()) -> Recording:
    """Full conditioning chain: low-pass then notch. Length, sample rate
    and metadata are preserved."""
    return notch(lowpass_zero_phase(rec, spec), spec)
