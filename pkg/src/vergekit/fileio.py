"""Text file formats for recordings, ground-truth events, and detections.

All three are CSV with a one-line versioned header that also carries the
config hash of the run that produced the file (empty when not applicable).
Floats are written with repr, so write -> read -> write is byte-identical.
Parse failures always name the 1-based line number.
"""
from __future__ import annotations

import numpy as np

from .events import DetectedEvent, EventSpan
from .sigcond import Recording

RECORDING_MAGIC = "vergekit-recording"
EVENTS_MAGIC = "vergekit-events"
DETECTIONS_MAGIC = "vergekit-detections"
FORMAT_VERSION = 1

TIME_JITTER_S = 1e-9


class FileFormatError(ValueError):
    pass


def _fail(path: str, lineno: int, msg: str) -> FileFormatError:
    return FileFormatError(f"{path}:{lineno}: {msg}")


def _parse_header(path: str, line: str, magic: str, n_extra: int) -> list[str]:
    parts = line.rstrip("\n").split(",")
    if not parts or parts[0] != magic:
        raise _fail(path, 1, f"expected a {magic} header")
    if len(parts) != 2 + n_extra + 1:
        raise _fail(path, 1, f"header has {len(parts)} fields, expected {3 + n_extra}")
    try:
        version = int(parts[1])
    except ValueError:
        raise _fail(path, 1, f"bad format version {parts[1]!r}") from None
    if version != FORMAT_VERSION:
        raise _fail(path, 1, f"unsupported format version {version}")
    return parts[2:]


def _float_field(path: str, lineno: int, text: str, name: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise _fail(path, lineno, f"bad {name} value {text!r}") from None
    if not np.isfinite(v):
        raise _fail(path, lineno, f"non-finite {name} value {text!r}")
    return v


# ---------------------------------------------------------------------------
# Recordings


def write_recording(path: str, rec: Recording, config_hash: str = "") -> None:
    left, right = rec.channel_names
    fs = float(rec.sample_rate)
    start = float(rec.start_time)
    # tolist() yields Python floats, whose repr is the shortest round-trip form
    l_vals = rec.samples[0].tolist()
    r_vals = rec.samples[1].tolist()
    with open(path, "w") as f:
        f.write(
            f"{RECORDING_MAGIC},{FORMAT_VERSION},{fs!r},{start!r},"
            f"{left},{right},{config_hash}\n"
        )
        f.write("time_s,left_mV,right_mV\n")
        for i, (lv, rv) in enumerate(zip(l_vals, r_vals)):
            t = start + i / fs
            f.write(f"{t!r},{lv!r},{rv!r}\n")


def read_recording(path: str) -> tuple[Recording, str]:
    """Returns (recording, config_hash). Validates monotone, uniform
    sampling to within 1e-9 s."""
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines:
        raise _fail(path, 1, "empty file")
    fs_s, t0_s, left, right, config_hash = _parse_header(
        path, lines[0], RECORDING_MAGIC, 4
    )
    fs = _float_field(path, 1, fs_s, "sample_rate")
    start = _float_field(path, 1, t0_s, "start_time")
    if len(lines) < 2 or lines[1] != "time_s,left_mV,right_mV":
        raise _fail(path, 2, "missing column header 'time_s,left_mV,right_mV'")
    n = len(lines) - 2
    samples = np.empty((2, n))
    prev_t = None
    for k in range(n):
        lineno = k + 3
        parts = lines[k + 2].split(",")
        if len(parts) != 3:
            raise _fail(path, lineno, f"expected 3 fields, got {len(parts)}")
        t = _float_field(path, lineno, parts[0], "time_s")
        if prev_t is not None and t <= prev_t:
            raise _fail(path, lineno, "time_s not strictly increasing")
        nominal = start + k / fs
        if abs(t - nominal) > TIME_JITTER_S:
            raise _fail(
                path,
                lineno,
                f"non-uniform sampling: time_s {t!r} deviates from nominal "
                f"{nominal!r} by more than {TIME_JITTER_S} s",
            )
        prev_t = t
        samples[0, k] = _float_field(path, lineno, parts[1], "left_mV")
        samples[1, k] = _float_field(path, lineno, parts[2], "right_mV")
    rec = Recording(samples, sample_rate=fs, start_time=start, channel_names=(left, right))
    return rec, config_hash


# ---------------------------------------------------------------------------
# Ground-truth event spans


def write_events(path: str, events: list[EventSpan], config_hash: str = "") -> None:
    ordered = sorted(events, key=lambda e: e.onset_s)
    for a, b in zip(ordered, ordered[1:]):
        if b.onset_s < a.offset_s:
            raise ValueError(
                f"events overlap: [{a.onset_s}, {a.offset_s}] and "
                f"[{b.onset_s}, {b.offset_s}]"
            )
    with open(path, "w") as f:
        f.write(f"{EVENTS_MAGIC},{FORMAT_VERSION},{config_hash}\n")
        f.write("onset_s,offset_s,label\n")
        for e in ordered:
            f.write(f"{float(e.onset_s)!r},{float(e.offset_s)!r},{e.label}\n")


def read_events(path: str) -> tuple[list[EventSpan], str]:
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines:
        raise _fail(path, 1, "empty file")
    (config_hash,) = _parse_header(path, lines[0], EVENTS_MAGIC, 0)
    if len(lines) < 2 or lines[1] != "onset_s,offset_s,label":
        raise _fail(path, 2, "missing column header 'onset_s,offset_s,label'")
    out: list[EventSpan] = []
    for k, line in enumerate(lines[2:]):
        lineno = k + 3
        parts = line.split(",")
        if len(parts) != 3:
            raise _fail(path, lineno, f"expected 3 fields, got {len(parts)}")
        onset = _float_field(path, lineno, parts[0], "onset_s")
        offset = _float_field(path, lineno, parts[1], "offset_s")
        if not parts[2]:
            raise _fail(path, lineno, "empty label")
        try:
            ev = EventSpan(onset, offset, parts[2])
        except ValueError as e:
            raise _fail(path, lineno, str(e)) from None
        if out and ev.onset_s < out[-1].offset_s:
            raise _fail(path, lineno, "events out of order or overlapping")
        out.append(ev)
    return out, config_hash


# ---------------------------------------------------------------------------
# Detections


def write_detections(
    path: str, events: list[DetectedEvent], config_hash: str = ""
) -> None:
    with open(path, "w") as f:
        f.write(f"{DETECTIONS_MAGIC},{FORMAT_VERSION},{config_hash}\n")
        f.write("timestamp_s,label,confidence,window_start_s\n")
        for e in events:
            f.write(
                f"{float(e.timestamp_s)!r},{e.label},{float(e.confidence)!r},"
                f"{float(e.window_start_s)!r}\n"
            )


def read_detections(path: str) -> tuple[list[DetectedEvent], str]:
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines:
        raise _fail(path, 1, "empty file")
    (config_hash,) = _parse_header(path, lines[0], DETECTIONS_MAGIC, 0)
    if len(lines) < 2 or lines[1] != "timestamp_s,label,confidence,window_start_s":
        raise _fail(
            path, 2, "missing column header 'timestamp_s,label,confidence,window_start_s'"
        )
    out: list[DetectedEvent] = []
    for k, line in enumerate(lines[2:]):
        lineno = k + 3
        parts = line.split(",")
        if len(parts) != 4:
            raise _fail(path, lineno, f"expected 4 fields, got {len(parts)}")
        out.append(
            DetectedEvent(
                _float_field(path, lineno, parts[0], "timestamp_s"),
                parts[1],
                _float_field(path, lineno, parts[2], "confidence"),
                _float_field(path, lineno, parts[3], "window_start_s"),
            )
        )
    return out, config_hash
