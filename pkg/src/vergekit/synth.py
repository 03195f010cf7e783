"""Parametric synthetic EOG generator: the repository's ground-truth oracle.

Real vergence data cannot ship with the code, so every classifier claim is
made against recordings produced here, where onset, offset, label, and peak
amplitude are known exactly. The waveform family is a smooth unimodal pulse
(a Gaussian-windowed squared-sech bump) whose peak amplitude is proportional
to the gesture's vergence-angle change; convergence deflects both channels
positive, divergence negative. Artifact templates cover the usual motion and
facial classes, scaled relative to a 45 mV vergence reference so that brow
raises and chewing sit well above the largest gesture.

All generators are pure functions of (parameters, seed).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .events import EventSpan
from .geometry import EyeConfig, GestureLabel, angle_delta, six_labels
from .sigcond import Recording

# mV of EOG deflection per degree of vergence change. 15 puts the smallest
# standard gesture (2.66 deg) just under 40 mV, above the 30 mV detection
# threshold, and the largest (8.09 deg) at about 121 mV.
DEFAULT_GAIN_MV_PER_DEG = 15.0

# reference amplitude for artifact scaling (a mid-sized vergence deflection)
ARTIFACT_REF_MV = 45.0

# pulse shape constants, tuned so the rising foot is steep enough that a
# walk-back onset estimate stays within 100 ms across the duration range
PULSE_SHARPNESS = 1.8
PULSE_WINDOW = 1.0


@dataclass(frozen=True)
class GestureTemplate:
    """Amplitude/duration law for one gesture class."""

    label: GestureLabel
    amplitude_gain: float = DEFAULT_GAIN_MV_PER_DEG
    duration_mean_s: float = 0.737
    duration_std_s: float = 0.170
    channel_polarity: tuple[float, float] = (1.0, 1.0)

    DURATION_CLAMP = (0.3, 1.5)

    def __post_init__(self):
        if not self.amplitude_gain > 0:
            raise ValueError("amplitude_gain must be positive")

    def sample_duration(self, rng: np.random.Generator) -> float:
        lo, hi = self.DURATION_CLAMP
        return float(np.clip(rng.normal(self.duration_mean_s, self.duration_std_s), lo, hi))


@dataclass(frozen=True)
class ArtifactKind:
    """One artifact template.

    amplitude_scale multiplies ARTIFACT_REF_MV. channel_pair fixes the
    relative deflection of (left, right): vergence is the only class that
    moves both channels identically (both eyes rotate symmetrically about
    the nose), so lateral and postural artifacts carry a reproducible
    asymmetry and conjugate movements an opposite sign. tremor_frac adds a
    broadband muscle component on top of the deterministic shape.
    """

    name: str
    amplitude_scale: float
    duration_s: float
    channel_pair: tuple[float, float] = (1.0, 1.0)
    tremor_frac: float = 0.2


ARTIFACT_KINDS: dict[str, ArtifactKind] = {
    k.name: k
    for k in (
        ArtifactKind("blink", 3.5, 0.3, (1.0, 1.0), 0.10),
        ArtifactKind("saccade", 1.5, 0.6, (1.0, -0.75), 0.10),
        ArtifactKind("brow_raise", 7.0, 0.8, (1.0, 1.0), 0.15),
        ArtifactKind("chewing", 3.2, 2.0, (1.0, 1.0), 0.35),
        ArtifactKind("talking", 1.0, 2.0, (1.0, 0.85), 0.30),
        ArtifactKind("walking", 0.6, 3.0, (1.0, 0.8), 0.25),
        ArtifactKind("nodding", 0.8, 1.5, (1.0, 0.75), 0.20),
        ArtifactKind("head_tilt", 0.7, 1.2, (1.0, 0.55), 0.20),
        ArtifactKind("stand_sit", 1.2, 1.5, (1.0, 0.65), 0.20),
        ArtifactKind("turning", 0.9, 1.0, (1.0, -0.6), 0.20),
    )
}

TREMOR_BAND_HZ = (8.0, 24.0)


@dataclass(frozen=True)
class DriftSpec:
    """Session-remount drift: per-channel affine y = (1+g)x + b with g and b
    drawn once per application from uniform bounds."""

    gain_jitter: float = 0.0
    offset_jitter_mv: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.gain_jitter <= 0.5:
            raise ValueError("gain_jitter must lie in [0, 0.5]")
        if self.offset_jitter_mv < 0:
            raise ValueError("offset_jitter_mv must be non-negative")


@dataclass(frozen=True)
class SessionSpec:
    """A cued acquisition session: `rounds` repetitions of `gesture_order`,
    one gesture per cue slot, over a Gaussian noise floor, preceded by a
    quiescent lead-in that the gate uses for its baseline estimate."""

    rounds: int = 10
    cue_interval_s: float = 3.0
    gesture_order: tuple[GestureLabel, ...] = tuple(six_labels())
    noise_floor_std_mv: float = 2.0
    drift: DriftSpec = field(default_factory=DriftSpec)
    seed: int = 0
    sample_rate: float = 500.0
    amplitude_gain: float = DEFAULT_GAIN_MV_PER_DEG
    lead_in_s: float = 2.0
    tail_s: float = 0.8
    onset_margin_s: float = 0.2
    wander_amp_mv: float = 0.0  # optional 0.3 Hz baseline wander
    wander_freq_hz: float = 0.3

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not self.gesture_order:
            raise ValueError("gesture_order must be non-empty")
        max_dur = GestureTemplate.DURATION_CLAMP[1]
        need = max_dur + 2 * self.onset_margin_s
        if self.cue_interval_s < need:
            raise ValueError(
                f"cue_interval_s ({self.cue_interval_s}) must cover the longest "
                f"gesture plus onset margins ({need:.1f} s)"
            )


def _pulse(n: int) -> np.ndarray:
    """Unimodal unit pulse on n samples (n odd): squared sech under a
    Gaussian window, shifted/scaled so the endpoints are exactly 0 and the
    centre sample exactly 1."""
    u = np.linspace(-1.0, 1.0, n)
    raw = (1.0 / np.cosh(PULSE_SHARPNESS * u)) ** 2 * np.exp(-((PULSE_WINDOW * u) ** 2))
    return (raw - raw[-1]) / (1.0 - raw[-1])


def _odd_count(duration_s: float, fs: float) -> int:
    n = max(3, int(round(duration_s * fs)))
    return n if n % 2 == 1 else n + 1


@dataclass(frozen=True)
class GestureWaveform:
    """A generated two-channel gesture pulse plus its bookkeeping."""

    samples: np.ndarray  # (2, n), n odd, peak at n//2
    duration_s: float
    label: GestureLabel
    peak_amplitude_mv: float

    @property
    def peak_index(self) -> int:
        return self.samples.shape[1] // 2


def gen_gesture(
    tpl: GestureTemplate,
    cfg: EyeConfig = EyeConfig(),
    rng_seed: int | np.random.Generator = 0,
    sample_rate: float = 500.0,
) -> GestureWaveform:
    """One synthetic gesture pulse. Peak amplitude is
    amplitude_gain * |angle_delta|, signed by direction and channel
    polarity; duration is drawn from the template's clamped normal."""
    rng = np.random.default_rng(rng_seed) if isinstance(rng_seed, int) else rng_seed
    duration = tpl.sample_duration(rng)
    n = _odd_count(duration, sample_rate)
    delta = angle_delta(cfg, tpl.label)
    base = _pulse(n)
    out = np.empty((2, n))
    for c in (0, 1):
        out[c] = tpl.amplitude_gain * delta * tpl.channel_polarity[c] * base
    return GestureWaveform(out, n / sample_rate, tpl.label, abs(tpl.amplitude_gain * delta))


def _envelope(n: int) -> np.ndarray:
    return np.hanning(n)


def _tremor(n: int, fs: float, rng: np.random.Generator) -> np.ndarray:
    """Unit-RMS band-limited noise in the TREMOR_BAND_HZ band."""
    lo, hi = TREMOR_BAND_HZ
    white = rng.normal(0.0, 1.0, n)
    spec = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    spec[(freqs < lo) | (freqs > hi)] = 0.0
    x = np.fft.irfft(spec, n)
    rms = np.sqrt(np.mean(x * x))
    return x / rms if rms > 0 else x


def gen_artifact(
    kind: ArtifactKind | str,
    rng_seed: int | np.random.Generator = 0,
    sample_rate: float = 500.0,
) -> np.ndarray:
    """One synthetic artifact waveform, shape (2, n).

    Shapes are caricatures with the right gross statistics: blinks are
    sharp biphasic pulses, saccades and turning deflect the two channels
    with opposite sign, chewing/talking/walking are rhythmic, postural
    shifts are slow bumps. Amplitude and rate are jittered per draw.
    """
    if isinstance(kind, str):
        if kind not in ARTIFACT_KINDS:
            raise ValueError(f"unknown artifact kind {kind!r}")
        kind = ARTIFACT_KINDS[kind]
    rng = np.random.default_rng(rng_seed) if isinstance(rng_seed, int) else rng_seed
    n = _odd_count(kind.duration_s, sample_rate)
    t = np.arange(n) / sample_rate
    amp = kind.amplitude_scale * ARTIFACT_REF_MV * rng.uniform(0.9, 1.1)
    env = _envelope(n)
    name = kind.name
    if name == "blink":
        # one full sine cycle under the envelope: down-up biphasic
        w = np.sin(2.0 * np.pi * t / t[-1]) * env
    elif name == "saccade":
        # out-and-back gaze shift: smooth boxcar
        rise = 0.03 * sample_rate
        w = 0.5 * (np.tanh((np.arange(n) - 0.15 * n) / rise) - np.tanh((np.arange(n) - 0.85 * n) / rise))
    elif name == "brow_raise":
        w = env**2
    elif name == "chewing":
        f = 1.5 * rng.uniform(0.9, 1.1)
        w = np.sin(2.0 * np.pi * f * t + rng.uniform(0, 2 * np.pi)) * env
    elif name == "talking":
        w = np.zeros(n)
        for f in (3.0, 4.5, 6.0):
            w += rng.uniform(0.2, 0.5) * np.sin(2.0 * np.pi * f * rng.uniform(0.9, 1.1) * t + rng.uniform(0, 2 * np.pi))
        w *= env
    elif name == "walking":
        f = 2.0 * rng.uniform(0.9, 1.1)
        w = (np.sin(2.0 * np.pi * f * t) + 0.3 * np.sin(4.0 * np.pi * f * t + rng.uniform(0, 2 * np.pi))) * env
    elif name == "nodding":
        # rhythmic: two full cycles, unlike the single-lobe gaze pulse
        w = np.sin(4.0 * np.pi * t / t[-1]) * env
    elif name == "head_tilt":
        w = np.minimum(1.0, 3.0 * np.minimum(t / t[-1], 1.0 - t / t[-1])) * env
    elif name == "stand_sit":
        w = env**2
    elif name == "turning":
        w = env
    else:
        raise ValueError(f"unknown artifact kind {name!r}")
    peak = np.max(np.abs(w))
    if peak > 0:
        w = w / peak
    sign = rng.choice((-1.0, 1.0))
    pair = kind.channel_pair
    out = np.empty((2, n))
    out[0] = amp * sign * pair[0] * w
    out[1] = amp * sign * pair[1] * w
    if kind.tremor_frac > 0:
        for c in (0, 1):
            out[c] += kind.tremor_frac * amp * abs(pair[c]) * env * _tremor(n, sample_rate, rng)
    return out


def gen_session(
    spec: SessionSpec, cfg: EyeConfig = EyeConfig()
) -> tuple[Recording, list[EventSpan]]:
    """A full cued session: `rounds` passes over `gesture_order`, one
    gesture per cue slot at a jittered onset, over a Gaussian noise floor.
    Returns the recording and the exact ground-truth event list."""
    rng = np.random.default_rng(spec.seed)
    fs = spec.sample_rate
    order = list(spec.gesture_order)
    n_events = spec.rounds * len(order)
    total_s = spec.lead_in_s + n_events * spec.cue_interval_s + spec.tail_s
    n = int(round(total_s * fs))
    samples = rng.normal(0.0, spec.noise_floor_std_mv, (2, n)) if spec.noise_floor_std_mv > 0 else np.zeros((2, n))
    if spec.wander_amp_mv > 0:
        tt = np.arange(n) / fs
        for c in (0, 1):
            samples[c] += spec.wander_amp_mv * np.sin(
                2.0 * np.pi * spec.wander_freq_hz * tt + rng.uniform(0, 2 * np.pi)
            )
    truth: list[EventSpan] = []
    for k in range(n_events):
        label = order[k % len(order)]
        tpl = GestureTemplate(label, amplitude_gain=spec.amplitude_gain)
        wav = gen_gesture(tpl, cfg, rng, sample_rate=fs)
        slot_start = spec.lead_in_s + k * spec.cue_interval_s
        latest = slot_start + spec.cue_interval_s - wav.duration_s - spec.onset_margin_s
        onset_s = rng.uniform(slot_start + spec.onset_margin_s, latest)
        i0 = int(round(onset_s * fs))
        samples[:, i0 : i0 + wav.samples.shape[1]] += wav.samples
        truth.append(EventSpan(i0 / fs, i0 / fs + wav.duration_s, label.key))
    rec = Recording(samples, sample_rate=fs)
    if spec.drift.gain_jitter > 0 or spec.drift.offset_jitter_mv > 0:
        rec = apply_drift(rec, spec.drift, rng)
    return rec, truth


def gen_artifact_session(
    kinds: list[str],
    n_events: int,
    *,
    seed: int = 0,
    sample_rate: float = 500.0,
    cue_interval_s: float = 4.0,
    noise_floor_std_mv: float = 2.0,
    lead_in_s: float = 2.0,
    tail_s: float = 0.8,
) -> tuple[Recording, list[EventSpan]]:
    """A gesture-free session containing only artifacts drawn round-robin
    from `kinds`. Used for gate training corpora and false-positive runs."""
    if not kinds:
        raise ValueError("kinds must be non-empty")
    rng = np.random.default_rng(seed)
    fs = sample_rate
    total_s = lead_in_s + n_events * cue_interval_s + tail_s
    n = int(round(total_s * fs))
    samples = rng.normal(0.0, noise_floor_std_mv, (2, n)) if noise_floor_std_mv > 0 else np.zeros((2, n))
    truth: list[EventSpan] = []
    for k in range(n_events):
        kind = ARTIFACT_KINDS[kinds[k % len(kinds)]]
        wav = gen_artifact(kind, rng, sample_rate=fs)
        dur = wav.shape[1] / fs
        slot_start = lead_in_s + k * cue_interval_s
        latest = slot_start + cue_interval_s - dur - 0.2
        onset_s = rng.uniform(slot_start + 0.2, max(slot_start + 0.2, latest))
        i0 = int(round(onset_s * fs))
        samples[:, i0 : i0 + wav.shape[1]] += wav
        truth.append(EventSpan(i0 / fs, i0 / fs + dur, kind.name))
    return Recording(samples, sample_rate=fs), truth


def apply_drift(
    rec: Recording, d: DriftSpec, rng_seed: int | np.random.Generator = 0
) -> Recording:
    """Per-channel affine remount drift y = (1+g)x + b, g and b sampled
    once per call. DriftSpec(0, 0) returns the recording unchanged."""
    rng = np.random.default_rng(rng_seed) if isinstance(rng_seed, int) else rng_seed
    out = np.empty_like(rec.samples)
    for c in (0, 1):
        g = rng.uniform(-d.gain_jitter, d.gain_jitter) if d.gain_jitter > 0 else 0.0
        b = rng.uniform(-d.offset_jitter_mv, d.offset_jitter_mv) if d.offset_jitter_mv > 0 else 0.0
        out[c] = (1.0 + g) * rec.samples[c] + b
    return rec.with_samples(out)
