"""Sliding-window segmentation, MAD activity gating, and the binary
vergence-vs-noise artifact classifier.

The stream is cut into 2 s windows advancing every 0.1 s. A window is
"active" when any channel deviates from the quiescent baseline median by
more than 4.5 times the baseline MAD (floored at 1 mV for degenerate
constant baselines). Active windows are summarized by 22 features (11 per
channel) and passed to a from-scratch L2-regularized logistic regression
fitted by Newton iterations; ties at probability 0.5 resolve to noise so
the gate errs toward suppressing false events.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .sigcond import Recording

WINDOW_S = 2.0
STEP_S = 0.1
GATE_MULTIPLIER = 4.5
MAD_FLOOR_MV = 1.0
BAND_LO_HZ = 0.5
BAND_HI_HZ = 10.0
WAVELET_LEVELS = 4

FEATURE_NAMES_PER_CHANNEL = (
    "mean",
    "max",
    "min",
    "band_power",
    "wavelet_energy",
    "variance",
    "rms",
    "peak_to_rms",
    "trapezoidal_integral",
    "max_derivative",
    "min_derivative",
)

ARTIFACT_FEATURE_NAMES = tuple(
    f"{ch}_{name}" for ch in ("left", "right") for name in FEATURE_NAMES_PER_CHANNEL
)

LABEL_VERGENCE = "vergence"
LABEL_NOISE = "noise"


@dataclass(frozen=True)
class Window:
    """A 2 s two-channel slice with its position in the stream."""

    samples: np.ndarray  # (2, N)
    start_index: int
    sample_rate: float
    step_s: float = STEP_S

    @property
    def start_time_s(self) -> float:
        return self.start_index / self.sample_rate

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def conditioned(self, spec=None) -> "Window":
        """The same window after the conditioning chain. Streaming operation
        buffers each window fully, so filtering happens per window."""
        from .sigcond import FilterSpec, condition

        rec = Recording(self.samples, sample_rate=self.sample_rate)
        out = condition(rec, spec if spec is not None else FilterSpec())
        return Window(out.samples, self.start_index, self.sample_rate, self.step_s)


@dataclass(frozen=True)
class GateThreshold:
    """Per-channel activity threshold and the baseline medians it is
    measured against."""

    threshold_mv: np.ndarray  # (2,)
    baseline_median_mv: np.ndarray  # (2,)

    def __post_init__(self):
        if np.any(np.asarray(self.threshold_mv) <= 0):
            raise ValueError("thresholds must be positive")


def sliding_windows(
    rec: Recording, window_s: float = WINDOW_S, step_s: float = STEP_S
) -> list[Window]:
    """All full windows of the recording at the fixed stride. A recording
    shorter than one window yields an empty list."""
    n_win = int(round(window_s * rec.sample_rate))
    n_step = int(round(step_s * rec.sample_rate))
    if n_step < 1:
        raise ValueError("step too small for the sample rate")
    out = []
    start = 0
    while start + n_win <= rec.n_samples:
        out.append(Window(rec.samples[:, start : start + n_win], start, rec.sample_rate, step_s))
        start += n_step
    return out


def baseline_threshold(
    rec: Recording,
    multiplier: float = GATE_MULTIPLIER,
    baseline_s: float = WINDOW_S,
    floor_mv: float = MAD_FLOOR_MV,
) -> GateThreshold:
    """Activity threshold from the assumed-quiescent first `baseline_s` of
    the given samples: per channel, median absolute deviation times the
    heuristic multiplier. A constant baseline has MAD 0; the threshold then
    falls back to the 1 mV floor instead of gating everything."""
    n = int(round(baseline_s * rec.sample_rate))
    if rec.n_samples < n:
        raise ValueError(
            f"recording too short for a {baseline_s} s baseline: "
            f"{rec.n_samples} samples"
        )
    base = rec.samples[:, :n]
    med = np.median(base, axis=1)
    mad = np.median(np.abs(base - med[:, None]), axis=1)
    thr = multiplier * mad
    thr[mad == 0.0] = floor_mv
    return GateThreshold(thr, med)


def is_active(w: Window, t: GateThreshold) -> bool:
    """True when any channel leaves the baseline band."""
    dev = np.abs(w.samples - np.asarray(t.baseline_median_mv)[:, None])
    return bool(np.any(dev.max(axis=1) > np.asarray(t.threshold_mv)))


def band_power(x: np.ndarray, fs: float, lo: float = BAND_LO_HZ, hi: float = BAND_HI_HZ) -> float:
    """One-sided periodogram integrated over [lo, hi] Hz."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    spec = np.fft.rfft(x)
    psd = (np.abs(spec) ** 2) / (fs * n)
    psd[1:] *= 2.0
    if n % 2 == 0:
        psd[-1] /= 2.0
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    mask = (freqs >= lo) & (freqs <= hi)
    if not np.any(mask):
        return 0.0
    return float(np.trapezoid(psd[mask], freqs[mask]))


def artifact_features(w: Window) -> np.ndarray:
    """The 22-dim window summary, 11 per channel in ARTIFACT_FEATURE_NAMES
    order. Derivative features are first differences scaled by the sample
    rate; wavelet energy is the squared detail energy of a 4-level Haar
    transform; band power integrates the periodogram over 0.5-10 Hz."""
    dt = 1.0 / w.sample_rate
    out = np.empty(22)
    for c in (0, 1):
        x = np.ascontiguousarray(w.samples[c])
        mean, mx, mn, var, rms, p2r, integ, maxd, mind = kernels.window_stats(x, dt)
        bp = band_power(x, w.sample_rate)
        we = kernels.haar_detail_energy(x, WAVELET_LEVELS)
        out[11 * c : 11 * (c + 1)] = (mean, mx, mn, bp, we, var, rms, p2r, integ, maxd, mind)
    return out


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class ArtifactModel:
    """Fitted binary gate: z-score stats plus logistic weights. y=1 means
    vergence. Immutable; see modelio for the serialized envelope."""

    weights: np.ndarray  # (22,)
    bias: float
    norm_mean: np.ndarray  # (22,)
    norm_std: np.ndarray  # (22,)
    l2: float
    n_iter: int

    def probability(self, features: np.ndarray) -> float:
        f = (np.asarray(features, dtype=np.float64) - self.norm_mean) / self.norm_std
        return float(_sigmoid(np.atleast_1d(f @ self.weights + self.bias))[0])


def fit_artifact_model(
    X: np.ndarray,
    y: np.ndarray,
    l2: float = 1e-4,
    tol: float = 1e-6,
    max_iter: int = 10000,
) -> ArtifactModel:
    """Newton fit of the regularized logistic gate.

    Loss is mean negative log-likelihood plus l2*||w||^2 (bias unpenalized),
    so uniformly duplicating the dataset leaves the optimum unchanged.
    Iterates until the gradient's max norm drops below `tol`.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X and y shapes disagree")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("training data contains a single class; need both")
    n, d = X.shape
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std < 1e-9, 1e-9, std)
    Z = (X - mean) / std
    A = np.concatenate([Z, np.ones((n, 1))], axis=1)
    theta = np.zeros(d + 1)
    reg = np.full(d + 1, 2.0 * l2)
    reg[-1] = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        p = _sigmoid(A @ theta)
        g = A.T @ (p - y) / n + reg * theta
        if np.max(np.abs(g)) < tol:
            break
        w = p * (1.0 - p)
        H = (A * w[:, None]).T @ A / n + np.diag(reg)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, g, rcond=None)[0]
        theta = theta - step
    return ArtifactModel(theta[:d].copy(), float(theta[d]), mean, std, l2, it)


def classify_window(m: ArtifactModel, features: np.ndarray) -> tuple[str, float]:
    """(label, probability-of-vergence). Probability exactly 0.5 resolves
    to noise."""
    p = m.probability(features)
    return (LABEL_VERGENCE if p > 0.5 else LABEL_NOISE), p
