"""Evaluation harness: SNR, cross-validation protocols, confusion matrices,
false-positive-rate measurement, and latency benchmarking.

Protocols operate on LabeledDataset bundles (features + integer labels +
recording groups) so that no recording ever spans a train/test boundary.
Cross-session and cross-user protocols normalize each session with its own
z-score statistics before pooling; that is what absorbs electrode-gain drift
between mountings.
"""

from __future__ import annotations

import time
import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .events import DetectedEvent, EventSpan
from .gate import (
    ArtifactModel,
    artifact_features,
    baseline_threshold,
    fit_artifact_model,
    is_active,
    sliding_windows,
)
from .geometry import four_labels, six_labels
from .gesture import (
    classify,
    classify_vergence_stream,
    detect_peaks,
    extract_features,
    extract_segment,
    fit_gesture_classifier,
    smooth_window,
)
from .forest import ForestModel, fit_forest, predict
from .normalize import zscore_apply, zscore_fit
from .sigcond import FilterSpec, Recording
from . import synth


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with labels and recording-group ids.

    groups[i] identifies the recording row i came from; protocols never put
    one group on both sides of a split. class_keys maps label integers to
    human-readable keys.
    """

    features: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    class_keys: tuple[str, ...]

    def __post_init__(self) -> None:
        f = np.asarray(self.features, dtype=np.float64)
        l = np.asarray(self.labels, dtype=np.int64)
        g = np.asarray(self.groups, dtype=np.int64)
        if f.ndim != 2 or f.shape[0] != l.shape[0] or f.shape[0] != g.shape[0]:
            raise ValueError("features, labels and groups must share length")
        if l.size and (l.min() < 0 or l.max() >= len(self.class_keys)):
            raise ValueError("label outside class_keys range")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", l)
        object.__setattr__(self, "groups", g)

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])


@dataclass(frozen=True)
class EvalReport:
    """Protocol outcome: accuracy mean/std over splits, pooled confusion
    counts (rows = truth, cols = prediction), and per-class precision and
    recall derived from the pooled matrix."""

    protocol: str
    accuracy_mean: float
    accuracy_std: float
    confusion: np.ndarray
    class_keys: tuple[str, ...]
    split_accuracies: tuple[float, ...] = field(default_factory=tuple)

    @property
    def precision(self) -> np.ndarray:
        col = self.confusion.sum(axis=0)
        with np.errstate(invalid="ignore"):
            p = np.where(col > 0, np.diag(self.confusion) / np.maximum(col, 1), 0.0)
        return p

    @property
    def recall(self) -> np.ndarray:
        row = self.confusion.sum(axis=1)
        return np.where(row > 0, np.diag(self.confusion) / np.maximum(row, 1), 0.0)

    def to_text(self) -> str:
        """Stable key order: protocol, accuracy, per-class lines, matrix."""
        lines = [
            f"protocol: {self.protocol}",
            f"accuracy: {self.accuracy_mean:.4f} +/- {self.accuracy_std:.4f}",
        ]
        for i, k in enumerate(self.class_keys):
            lines.append(
                f"class {k}: precision {self.precision[i]:.4f} recall {self.recall[i]:.4f}"
            )
        lines.append("confusion (rows=truth):")
        for i, k in enumerate(self.class_keys):
            lines.append(f"  {k}: " + " ".join(str(int(v)) for v in self.confusion[i]))
        return "\n".join(lines)

    def confusion_csv(self) -> str:
        head = "truth\\pred," + ",".join(self.class_keys)
        rows = [
            f"{k}," + ",".join(str(int(v)) for v in self.confusion[i])
            for i, k in enumerate(self.class_keys)
        ]
        return "\n".join([head, *rows]) + "\n"


def _confusion(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> np.ndarray:
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        m[t, p] += 1
    return m


# ---------------------------------------------------------------------------
# SNR


def snr_db(
    rec: Recording, spans: list[EventSpan], flank_s: float = 0.2
) -> tuple[np.ndarray, float]:
    """Per-event SNR in dB plus the mean over events.

    SNR = 20*log10(RMS(event) / RMS(concatenated flank_s of noise on each
    side)). An event without a full flank on both sides is excluded with a
    warning and reported as NaN in the per-event array.
    """
    fs = rec.sample_rate
    out = np.full(len(spans), np.nan)
    for i, ev in enumerate(spans):
        i0 = int(round(ev.onset_s * fs))
        i1 = int(round(ev.offset_s * fs))
        nf = int(round(flank_s * fs))
        if i0 - nf < 0 or i1 + nf > rec.n_samples:
            warnings.warn(
                f"event {i} at [{ev.onset_s:.2f}, {ev.offset_s:.2f}] s lacks a "
                f"{flank_s} s flank; excluded from SNR",
                stacklevel=2,
            )
            continue
        seg = rec.samples[:, i0:i1]
        noise = np.concatenate(
            [rec.samples[:, i0 - nf : i0], rec.samples[:, i1 : i1 + nf]], axis=1
        )
        rms_sig = float(np.sqrt(np.mean(seg**2)))
        rms_noise = float(np.sqrt(np.mean(noise**2)))
        if rms_noise == 0.0:
            out[i] = np.inf if rms_sig > 0 else 0.0
        else:
            out[i] = 20.0 * np.log10(rms_sig / rms_noise) if rms_sig > 0 else -np.inf
    valid = out[np.isfinite(out)]
    mean = float(np.mean(valid)) if valid.size else float("nan")
    return out, mean


# ---------------------------------------------------------------------------
# Cross-validation protocols


def _group_folds(ds: LabeledDataset, k: int, seed: int) -> list[np.ndarray]:
    """Assign whole groups to k folds, balancing fold sizes and, greedily,
    the per-class composition. Returns a list of row-index arrays."""
    rng = np.random.default_rng(seed)
    gids = np.unique(ds.groups)
    order = rng.permutation(gids)
    n_classes = len(ds.class_keys)
    fold_of: dict[int, int] = {}
    fold_counts = np.zeros((k, n_classes), dtype=np.int64)
    for g in order:
        hist = np.bincount(ds.labels[ds.groups == g], minlength=n_classes)
        major = int(np.argmax(hist))
        # prefer the fold currently lightest in this group's majority class,
        # break ties toward the smallest fold overall
        cost = fold_counts[:, major] * n_classes + fold_counts.sum(axis=1) / max(
            1, len(gids)
        )
        f = int(np.argmin(cost))
        fold_of[int(g)] = f
        fold_counts[f] += hist
    folds = [
        np.where(np.isin(ds.groups, [g for g, f in fold_of.items() if f == i]))[0]
        for i in range(k)
    ]
    return folds


def kfold_cv(
    ds: LabeledDataset,
    k: int = 5,
    seed: int = 0,
    n_trees: int = 100,
    max_depth: int | None = None,
) -> EvalReport:
    """Stratified, recording-grouped k-fold cross-validation of the gesture
    forest. Every class needs at least k instances."""
    counts = Counter(int(v) for v in ds.labels)
    short = [ds.class_keys[c] for c in range(len(ds.class_keys)) if counts.get(c, 0) < k]
    if short:
        raise ValueError(f"classes with fewer than {k} instances: {', '.join(short)}")
    folds = _group_folds(ds, k, seed)
    n_classes = len(ds.class_keys)
    conf = np.zeros((n_classes, n_classes), dtype=np.int64)
    accs = []
    for i, test_idx in enumerate(folds):
        if test_idx.size == 0:
            continue
        train_idx = np.setdiff1d(np.arange(ds.n), test_idx)
        model = fit_gesture_classifier(
            ds.features[train_idx],
            ds.labels[train_idx],
            ds.class_keys,
            n_trees=n_trees,
            seed=seed + i,
            max_depth=max_depth,
        )
        pred = np.array(
            [ds.class_keys.index(classify(model, f)[0]) for f in ds.features[test_idx]]
        )
        accs.append(float(np.mean(pred == ds.labels[test_idx])))
        conf += _confusion(ds.labels[test_idx], pred, n_classes)
    return EvalReport(
        "within_session",
        float(np.mean(accs)),
        float(np.std(accs)),
        conf,
        ds.class_keys,
        tuple(accs),
    )


def _self_normalized(ds: LabeledDataset) -> np.ndarray:
    """Session features in that session's own z-score frame; the gain and
    offset of a particular electrode mounting cancel out here."""
    if ds.n < 2:
        return ds.features.copy()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        stats = zscore_fit(ds.features)
    return zscore_apply(stats, ds.features)


def cross_session_eval(
    session_a: LabeledDataset,
    session_b: LabeledDataset,
    n_trees: int = 100,
    seed: int = 0,
) -> EvalReport:
    """Train on one session, test on the other, both ways; report the mean.
    Each session is normalized with its own statistics first."""
    if session_a.class_keys != session_b.class_keys:
        raise ValueError("class sets differ between sessions")
    n_classes = len(session_a.class_keys)
    conf = np.zeros((n_classes, n_classes), dtype=np.int64)
    accs = []
    za, zb = _self_normalized(session_a), _self_normalized(session_b)
    for (Xtr, ytr), (Xte, yte) in (
        ((za, session_a.labels), (zb, session_b.labels)),
        ((zb, session_b.labels), (za, session_a.labels)),
    ):
        model = fit_forest(Xtr, ytr, session_a.class_keys, n_trees=n_trees, seed=seed)
        pred = predict(model, Xte)
        accs.append(float(np.mean(pred == yte)))
        conf += _confusion(yte, pred, n_classes)
    return EvalReport(
        "cross_session",
        float(np.mean(accs)),
        float(np.std(accs)),
        conf,
        session_a.class_keys,
        tuple(accs),
    )


def leave_one_user_out(
    datasets: dict[str, LabeledDataset],
    n_trees: int = 100,
    seed: int = 0,
) -> EvalReport:
    """Hold out each user in turn, train pooled on the rest, report per-user
    accuracies and their mean/std. Users are normalized independently."""
    if len(datasets) < 2:
        raise ValueError("leave-one-user-out needs at least 2 users")
    keys = None
    for name, ds in datasets.items():
        if keys is None:
            keys = ds.class_keys
        elif ds.class_keys != keys:
            raise ValueError(f"user {name!r} has a different class set")
    assert keys is not None
    n_classes = len(keys)
    normed = {name: _self_normalized(ds) for name, ds in datasets.items()}
    conf = np.zeros((n_classes, n_classes), dtype=np.int64)
    accs = []
    for held in datasets:
        Xtr = np.concatenate([normed[u] for u in datasets if u != held])
        ytr = np.concatenate([datasets[u].labels for u in datasets if u != held])
        model = fit_forest(Xtr, ytr, keys, n_trees=n_trees, seed=seed)
        pred = predict(model, normed[held])
        accs.append(float(np.mean(pred == datasets[held].labels)))
        conf += _confusion(datasets[held].labels, pred, n_classes)
    return EvalReport(
        "cross_user",
        float(np.mean(accs)),
        float(np.std(accs)),
        conf,
        keys,
        tuple(accs),
    )


# ---------------------------------------------------------------------------
# Stream-level scoring


def match_events(
    truth: list[EventSpan],
    detected: list[DetectedEvent],
    slack_s: float = 0.25,
) -> tuple[list[tuple[EventSpan, DetectedEvent]], list[EventSpan], list[DetectedEvent]]:
    """Greedy timestamp matching: a detection matches a truth span when its
    timestamp falls in [onset - slack, offset + slack]. Each detection is
    consumed by at most one span. Returns (matches, missed, false_positives).
    """
    used: set[int] = set()
    matches = []
    missed = []
    for ev in sorted(truth, key=lambda e: e.onset_s):
        hit = None
        for i, d in enumerate(detected):
            if i in used:
                continue
            if ev.onset_s - slack_s <= d.timestamp_s <= ev.offset_s + slack_s:
                hit = i
                break
        if hit is None:
            missed.append(ev)
        else:
            used.add(hit)
            matches.append((ev, detected[hit]))
    fps = [d for i, d in enumerate(detected) if i not in used]
    return matches, missed, fps


@dataclass(frozen=True)
class FprResult:
    """events / active windows, with enough context to report it honestly."""

    n_events: int
    n_active_windows: int
    duration_s: float

    @property
    def rate(self) -> float:
        if self.n_active_windows == 0:
            return 0.0
        return self.n_events / self.n_active_windows

    @property
    def undefined(self) -> bool:
        return self.n_active_windows == 0

    @property
    def events_per_minute(self) -> float:
        if self.duration_s == 0:
            return 0.0
        return self.n_events * 60.0 / self.duration_s


def false_positive_rate(
    rec: Recording,
    gate_model: ArtifactModel,
    forest_model: ForestModel,
    preamble_on: bool,
    filter_spec: FilterSpec = FilterSpec(),
) -> FprResult:
    """Emitted events over gate-passing windows on a recording whose ground
    truth contains no vergence gestures."""
    events = classify_vergence_stream(
        rec, gate_model, forest_model, filter_spec=filter_spec, preamble=preamble_on
    )
    thr = baseline_threshold(rec)
    n_active = 0
    for w in sliding_windows(rec):
        if is_active(w.conditioned(filter_spec), thr):
            n_active += 1
    return FprResult(len(events), n_active, rec.duration_s)


def latency_bench(
    gate_model: ArtifactModel,
    forest_model: ForestModel,
    n_windows: int = 2500,
    seed: int = 99,
    filter_spec: FilterSpec = FilterSpec(),
) -> tuple[float, float]:
    """(mean, std) wall-clock milliseconds per window for the full per-window
    path: condition, gate, and, on gate-passing windows, smooth + detect +
    classify. The first 20 windows warm caches and are not timed."""
    if n_windows <= 0:
        raise ValueError("n_windows must be positive")
    rounds = max(1, int(np.ceil((n_windows + 20) * 0.1 / 18.0)) + 1)
    rec, _ = synth.gen_session(synth.SessionSpec(seed=seed, rounds=rounds))
    windows = sliding_windows(rec)
    if len(windows) < n_windows + 20:
        raise RuntimeError("generated stream too short for the requested bench")
    thr = baseline_threshold(rec)
    times = np.empty(n_windows)
    for i, w in enumerate(windows[: n_windows + 20]):
        t0 = time.perf_counter()
        wc = w.conditioned(filter_spec)
        if is_active(wc, thr):
            feats = artifact_features(wc)
            if gate_model.probability(feats) > 0.5:
                ws = smooth_window(wc, filter_spec)
                for peak in detect_peaks(ws):
                    seg = extract_segment(ws, peak)
                    if seg is not None:
                        classify(forest_model, extract_features(seg))
        dt = time.perf_counter() - t0
        if i >= 20:
            times[i - 20] = dt * 1000.0
    return float(np.mean(times)), float(np.std(times))


# ---------------------------------------------------------------------------
# Corpus builders (the repository's standard synthetic evaluation recipes)

GATE_CLASS_KEYS = ("noise", "vergence")


def gate_rows_for_recording(
    rec: Recording,
    truth: list[EventSpan],
    vergence_truth: bool,
    filter_spec: FilterSpec,
) -> tuple[list[np.ndarray], list[int]]:
    """Active windows only, since only those reach the gate classifier.
    In gesture recordings a window is a vergence row when it fully contains
    an event and a noise row when it overlaps none; partially covered
    windows are ambiguous and excluded. In artifact recordings every active
    window is noise."""
    thr = baseline_threshold(rec)
    fs = rec.sample_rate
    X: list[np.ndarray] = []
    y: list[int] = []
    for w in sliding_windows(rec):
        wc = w.conditioned(filter_spec)
        if not is_active(wc, thr):
            continue
        if not vergence_truth:
            X.append(artifact_features(wc))
            y.append(0)
            continue
        t0 = w.start_index / fs
        t1 = t0 + (w.n_samples / fs)
        contained = any(ev.onset_s >= t0 and ev.offset_s <= t1 for ev in truth)
        overlap = any(ev.onset_s < t1 and ev.offset_s > t0 for ev in truth)
        if contained:
            X.append(artifact_features(wc))
            y.append(1)
        elif not overlap:
            X.append(artifact_features(wc))
            y.append(0)
    return X, y


def make_gate_dataset(
    gesture_seeds: tuple[int, ...] = (1001, 1002, 1003, 1004),
    artifact_seeds: tuple[int, ...] = (2001, 2002),
    rounds: int = 3,
    n_artifact_events: int = 40,
    filter_spec: FilterSpec = FilterSpec(),
) -> LabeledDataset:
    """Binary gate corpus mixing cued gesture recordings with artifact-only
    recordings over every artifact kind. Groups are whole recordings."""
    X: list[np.ndarray] = []
    y: list[int] = []
    g: list[int] = []
    gid = 0
    for seed in gesture_seeds:
        rec, truth = synth.gen_session(synth.SessionSpec(seed=seed, rounds=rounds))
        rx, ry = gate_rows_for_recording(rec, truth, True, filter_spec)
        X += rx
        y += ry
        g += [gid] * len(rx)
        gid += 1
    kinds = list(synth.ARTIFACT_KINDS)
    for seed in artifact_seeds:
        rec, truth = synth.gen_artifact_session(kinds, n_artifact_events, seed=seed)
        rx, ry = gate_rows_for_recording(rec, truth, False, filter_spec)
        X += rx
        y += ry
        g += [gid] * len(rx)
        gid += 1
    return LabeledDataset(np.array(X), np.array(y), np.array(g), GATE_CLASS_KEYS)


def train_gate(ds: LabeledDataset) -> ArtifactModel:
    """Fit the logistic gate on a gate dataset (labels 0=noise, 1=vergence)."""
    return fit_artifact_model(ds.features, ds.labels.astype(np.float64))


def gesture_rows_for_recording(
    rec: Recording,
    truth: list[EventSpan],
    keys: tuple[str, ...],
    max_windows_per_event: int = 3,
    filter_spec: FilterSpec = FilterSpec(),
) -> tuple[list[np.ndarray], list[int]]:
    """One feature row per (event, window alignment): every window fully
    containing an event yields one peak-centred segment, up to the cap.
    Events whose smoothed peak never clears the detection threshold
    contribute nothing; that is the detector's honest behavior, not a bug."""
    fs = rec.sample_rate
    windows = sliding_windows(rec)
    X: list[np.ndarray] = []
    y: list[int] = []
    for ev in truth:
        hits = 0
        for w in windows:
            t0 = w.start_index / fs
            if not (ev.onset_s >= t0 and ev.offset_s <= t0 + w.n_samples / fs):
                continue
            ws = smooth_window(w.conditioned(filter_spec), filter_spec)
            peaks = [
                p
                for p in detect_peaks(ws)
                if ev.onset_s <= t0 + p / fs <= ev.offset_s + 0.1
            ]
            if not peaks:
                continue
            seg = extract_segment(ws, peaks[0])
            if seg is None:
                continue
            X.append(extract_features(seg))
            y.append(keys.index(ev.label))
            hits += 1
            if hits >= max_windows_per_event:
                break
    return X, y


def make_gesture_dataset(
    seeds: tuple[int, ...] = (501, 502, 503, 504, 505),
    rounds: int = 6,
    four_class: bool = False,
    amplitude_gain: float = synth.DEFAULT_GAIN_MV_PER_DEG,
    max_windows_per_event: int = 3,
    filter_spec: FilterSpec = FilterSpec(),
) -> LabeledDataset:
    """Gesture feature corpus: for each ground-truth event, up to
    `max_windows_per_event` differently aligned windows contribute one
    segment each. Groups are recordings (one per seed)."""
    labels = four_labels() if four_class else six_labels()
    keys = tuple(l.key for l in labels)
    order = list(labels)
    X: list[np.ndarray] = []
    y: list[int] = []
    g: list[int] = []
    for gid, seed in enumerate(seeds):
        spec = synth.SessionSpec(
            seed=seed, rounds=rounds, gesture_order=order, amplitude_gain=amplitude_gain
        )
        rec, truth = synth.gen_session(spec)
        rx, ry = gesture_rows_for_recording(
            rec, truth, keys, max_windows_per_event, filter_spec
        )
        X += rx
        y += ry
        g += [gid] * len(rx)
    return LabeledDataset(np.array(X), np.array(y), np.array(g), keys)
