"""Per-window gesture decoding: smoothing, peak-anchored segmentation,
20-dim feature extraction, forest classification, stream deduplication,
and the brow-raise preamble state machine.

The streaming flow for each 2 s window is: condition, gate, Savitzky-Golay
smooth, find peaks of |deviation from the window median| above 30 mV (both
polarities, either channel, 0.5 s minimum separation), cut a 1 s segment
centred on each peak, extract five shape features per channel per segment
half, z-score with the model's training stats, and take the forest's
majority vote. One physical gesture appears in many overlapping windows, so
detections whose peak timestamps fall within 0.5 s are merged keeping the
highest-confidence label. Event timestamps are estimated onsets: a walk
back from the smoothed peak to 5% of its deviation.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .events import DetectedEvent
from .forest import ForestModel, fit_forest, predict_votes
from .gate import (
    ArtifactModel,
    GateThreshold,
    Window,
    artifact_features,
    baseline_threshold,
    classify_window,
    is_active,
    sliding_windows,
    LABEL_VERGENCE,
)
from .geometry import EyeConfig, angle_delta, six_labels
from .normalize import zscore_apply, zscore_fit
from .sigcond import FilterSpec, Recording, savgol
from .synth import DEFAULT_GAIN_MV_PER_DEG

PEAK_THRESHOLD_MV = 30.0
MIN_PEAK_SEPARATION_S = 0.5
SEGMENT_S = 1.0
ONSET_WALKBACK_FRAC = 0.05
PREAMBLE_REFRACTORY_S = 1.0

HALF_NAMES = ("first", "second")
SEGMENT_FEATURE_NAMES = ("range", "integral", "slope", "deriv_mean", "deriv_var")

# left channel first, first half first
GESTURE_FEATURE_NAMES = tuple(
    f"{ch}_{half}_{feat}"
    for ch in ("left", "right")
    for half in HALF_NAMES
    for feat in SEGMENT_FEATURE_NAMES
)


def default_brow_threshold(
    gain: float = DEFAULT_GAIN_MV_PER_DEG, cfg: EyeConfig = EyeConfig()
) -> float:
    """Twice the largest vergence amplitude at the given gain: brow raises
    are generated well above this, gestures always below."""
    biggest = max(abs(angle_delta(cfg, g)) for g in six_labels())
    return 2.0 * gain * biggest


@dataclass(frozen=True)
class GestureSegment:
    """A 1 s two-channel slice centred on a detected peak. peak_index is
    the peak's index within the source window."""

    samples: np.ndarray  # (2, n), n = sample_rate * 1 s
    peak_index: int
    sample_rate: float
    window_start_index: int = 0

    @property
    def centre(self) -> int:
        return self.samples.shape[1] // 2


def smooth_window(w: Window, spec: FilterSpec = FilterSpec()) -> Window:
    """Savitzky-Golay smoothing of a (conditioned) window."""
    return Window(
        savgol(w.samples, spec.savgol_window, spec.savgol_order),
        w.start_index,
        w.sample_rate,
        w.step_s,
    )


def _channel_deviation(samples: np.ndarray) -> np.ndarray:
    return np.abs(samples - np.median(samples, axis=1, keepdims=True))


def detect_peaks(
    w: Window,
    min_amplitude_mv: float = PEAK_THRESHOLD_MV,
    min_separation_s: float = MIN_PEAK_SEPARATION_S,
) -> list[int]:
    """Peak indices in a smoothed window: local maxima of the absolute
    deviation from each channel's median above the amplitude threshold,
    pooled over channels, at least min_separation apart (larger deviation
    wins). Catches both polarities by construction."""
    dev = _channel_deviation(w.samples)
    sep = int(round(min_separation_s * w.sample_rate))
    cands: list[tuple[float, int]] = []
    for c in (0, 1):
        for idx in kernels.peak_scan(np.ascontiguousarray(dev[c]), float(min_amplitude_mv), sep):
            cands.append((-dev[c, idx], int(idx)))
    cands.sort()
    kept: list[int] = []
    for _, idx in cands:
        if all(abs(idx - k) >= sep for k in kept):
            kept.append(idx)
    return sorted(kept)


def extract_segment(w: Window, peak: int) -> GestureSegment | None:
    """The 1 s peak-centred slice, or None when the peak sits within 0.5 s
    of a window edge. Skipped peaks are not an error: the 0.1 s stride
    re-centres the same physical peak in a later window."""
    half = int(round(SEGMENT_S * w.sample_rate)) // 2
    n = w.n_samples
    if peak < half or peak + half > n:
        return None
    return GestureSegment(
        np.ascontiguousarray(w.samples[:, peak - half : peak + half]),
        peak,
        w.sample_rate,
        w.start_index,
    )


def _half_features(x: np.ndarray, fs: float) -> tuple[float, float, float, float, float]:
    rng_ = float(np.max(x) - np.min(x))
    integ = float(np.trapezoid(x, dx=1.0 / fs))
    slope = float((x[-1] - x[0]) / (SEGMENT_S / 2.0))
    d = np.diff(x) * fs
    return rng_, integ, slope, float(np.mean(d)), float(np.var(d))


def extract_features(seg: GestureSegment) -> np.ndarray:
    """The 20-dim shape descriptor in GESTURE_FEATURE_NAMES order: per
    channel (left first) and per half (first half first): amplitude range,
    trapezoidal integral, end-to-end slope over the 0.5 s half, and the
    mean and variance of the first derivative (differences times the
    sample rate)."""
    n = seg.samples.shape[1]
    half = n // 2
    fs = seg.sample_rate
    out = np.empty(20)
    k = 0
    for c in (0, 1):
        for sl in (slice(0, half), slice(half, n)):
            out[k : k + 5] = _half_features(seg.samples[c, sl], fs)
            k += 5
    return out


def fit_gesture_classifier(
    X: np.ndarray,
    y: np.ndarray,
    class_keys: tuple[str, ...],
    n_trees: int = 100,
    seed: int = 0,
    max_features: int | None = None,
    max_depth: int | None = None,
    bootstrap: bool = True,
) -> ForestModel:
    """Z-score the raw features on this training set, then fit the forest
    on the normalized matrix. The stats ride along in the model."""
    stats = zscore_fit(X)
    return fit_forest(
        zscore_apply(stats, X),
        y,
        class_keys,
        n_trees=n_trees,
        seed=seed,
        max_features=max_features,
        max_depth=max_depth,
        bootstrap=bootstrap,
        norm_stats=stats,
    )


def classify(model: ForestModel, features: np.ndarray) -> tuple[str, np.ndarray]:
    """(label key, per-class vote fractions) for one raw feature vector,
    normalized with the model's own stats. Vote ties resolve to the lowest
    class index."""
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 1:
        raise ValueError("expected a single 1-D feature vector")
    if model.norm_stats is not None:
        f = zscore_apply(model.norm_stats, f)
    votes = predict_votes(model, f[None, :])[0]
    return model.class_keys[int(np.argmax(votes))], votes


@dataclass(frozen=True)
class PreambleState:
    """Brow-raise toggle state. last_peak_time_s tracks the absolute brow
    peak that caused the last toggle: one physical brow raise is visible in
    around fifteen consecutive windows, so a new toggle requires the peak
    time itself to advance by at least the refractory."""

    active: bool = False
    last_toggle_time_s: float = -np.inf
    refractory_s: float = PREAMBLE_REFRACTORY_S
    last_peak_time_s: float = -np.inf


def update_preamble(
    state: PreambleState,
    w: Window,
    threshold: GateThreshold,
    brow_threshold_mv: float | None = None,
) -> tuple[PreambleState, bool]:
    """Toggle the active flag when a conditioned window contains a
    brow-scale deviation. Returns (new state, toggled)."""
    if brow_threshold_mv is None:
        brow_threshold_mv = default_brow_threshold()
    dev = np.abs(w.samples - np.asarray(threshold.baseline_median_mv)[:, None])
    flat = dev.max(axis=0)
    if float(flat.max(initial=0.0)) <= brow_threshold_mv:
        return state, False
    peak_idx = int(np.argmax(flat))
    peak_time = (w.start_index + peak_idx) / w.sample_rate
    if peak_time - state.last_peak_time_s < state.refractory_s:
        return state, False
    new = replace(
        state,
        active=not state.active,
        last_toggle_time_s=peak_time,
        last_peak_time_s=peak_time,
    )
    return new, True


def estimate_onset_index(dev: np.ndarray, peak: int, frac: float = ONSET_WALKBACK_FRAC) -> int | None:
    """Walk back from the peak to the first sample at or below
    frac * dev[peak]. None when the deviation never falls below the mark
    inside the window (the onset lies left of the window edge)."""
    mark = frac * dev[peak]
    i = peak
    while i > 0 and dev[i] > mark:
        i -= 1
    if i == 0 and dev[0] > mark:
        return None
    return i


@dataclass(frozen=True)
class _Candidate:
    peak_time_s: float
    event: DetectedEvent


def classify_vergence_stream(
    rec: Recording,
    gate_model: ArtifactModel,
    forest_model: ForestModel,
    *,
    filter_spec: FilterSpec = FilterSpec(),
    gate_multiplier: float = 4.5,
    peak_threshold_mv: float = PEAK_THRESHOLD_MV,
    min_separation_s: float = MIN_PEAK_SEPARATION_S,
    preamble: bool = False,
    brow_threshold_mv: float | None = None,
    refractory_s: float = PREAMBLE_REFRACTORY_S,
    onset_frac: float = ONSET_WALKBACK_FRAC,
    window_s: float = 2.0,
    step_s: float = 0.1,
) -> list[DetectedEvent]:
    """Run the full detector over a raw recording and return merged events.

    With `preamble` enabled nothing is emitted until a brow raise toggles
    the stream active, and brow-scale peaks are treated as control input,
    never classified as gestures.
    """
    windows = sliding_windows(rec, window_s, step_s)
    if not windows:
        return []
    if brow_threshold_mv is None:
        brow_threshold_mv = default_brow_threshold()
    thr = baseline_threshold(rec, multiplier=gate_multiplier, baseline_s=window_s)
    state = PreambleState(refractory_s=refractory_s)
    merged: list[_Candidate] = []
    for w in windows:
        wc = w.conditioned(filter_spec)
        if preamble:
            state, _ = update_preamble(state, wc, thr, brow_threshold_mv)
            if not state.active:
                continue
        if not is_active(wc, thr):
            continue
        label, _p = classify_window(gate_model, artifact_features(wc))
        if label != LABEL_VERGENCE:
            continue
        ws = smooth_window(wc, filter_spec)
        # onset walk-back references the recording's quiescent baseline, not
        # the window median: a pulse filling half the window drags the
        # median up and would bias the estimated onset late
        pooled = np.abs(
            ws.samples - np.asarray(thr.baseline_median_mv)[:, None]
        ).max(axis=0)
        for peak in detect_peaks(ws, peak_threshold_mv, min_separation_s):
            if preamble and pooled[peak] > brow_threshold_mv:
                continue
            seg = extract_segment(ws, peak)
            if seg is None:
                continue
            onset_idx = estimate_onset_index(pooled, peak, onset_frac)
            if onset_idx is None:
                continue
            label_key, votes = classify(forest_model, extract_features(seg))
            confidence = float(np.max(votes))
            peak_time = (w.start_index + peak) / rec.sample_rate
            ev = DetectedEvent(
                timestamp_s=rec.start_time + (w.start_index + onset_idx) / rec.sample_rate,
                label=label_key,
                confidence=confidence,
                window_start_s=rec.start_time + w.start_time_s,
            )
            _merge(merged, _Candidate(peak_time, ev), min_separation_s)
    events = [c.event for c in merged]
    # emitted timestamps inherit the peak-separation guarantee; enforce it
    # directly in case two distinct peaks produced near-identical onsets
    events.sort(key=lambda e: e.timestamp_s)
    deduped: list[DetectedEvent] = []
    for ev in events:
        if deduped and ev.timestamp_s - deduped[-1].timestamp_s < min_separation_s:
            if ev.confidence > deduped[-1].confidence:
                deduped[-1] = ev
        else:
            deduped.append(ev)
    return deduped


def _merge(merged: list[_Candidate], cand: _Candidate, min_sep_s: float) -> None:
    for i, old in enumerate(merged):
        if abs(old.peak_time_s - cand.peak_time_s) < min_sep_s:
            if cand.event.confidence > old.event.confidence:
                merged[i] = cand
            return
    merged.append(cand)
