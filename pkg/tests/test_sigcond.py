import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vergekit.sigcond import (
    FilterSpec,
    Recording,
    condition,
    lowpass_zero_phase,
    notch,
    savgol,
)

FS = 500.0
SPEC = FilterSpec()


def make_rec(x: np.ndarray) -> Recording:
    return Recording(np.vstack([x, x]), sample_rate=FS)


def sine(freq: float, n: int, phase: float = 0.0) -> np.ndarray:
    t = np.arange(n) / FS
    return np.sin(2.0 * np.pi * freq * t + phase)


def probe_attenuation_db(transform, freq: float, n: int = 5000) -> float:
    """Steady-state amplitude ratio of a sine through `transform`, measured
    away from the edges."""
    x = sine(freq, n)
    y = transform(make_rec(x)).samples[0]
    mid = slice(n // 4, 3 * n // 4)
    a_in = np.max(np.abs(x[mid]))
    a_out = np.max(np.abs(y[mid]))
    return 20.0 * math.log10(a_in / max(a_out, 1e-300))


def analytic_butterworth_db(freq: float, cutoff: float, order: int, passes: int = 2) -> float:
    """|H| of a digital Butterworth designed by the bilinear transform: the
    analog prototype's response evaluated at the prewarped frequency. Each
    filtfilt pass applies the magnitude once more."""
    ratio = math.tan(math.pi * freq / FS) / math.tan(math.pi * cutoff / FS)
    return passes * 10.0 * math.log10(1.0 + ratio ** (2 * order))


class TestLowpass:
    def test_matches_analytic_oracle(self):
        # the implementation is scipy's; the oracle is derived independently
        # from the bilinear-transform prewarping relation
        for freq in (20.0, 40.0, 60.0):
            measured = probe_attenuation_db(lambda r: lowpass_zero_phase(r, SPEC), freq)
            predicted = analytic_butterworth_db(freq, SPEC.lowpass_cutoff_hz, SPEC.lowpass_order)
            assert measured == pytest.approx(predicted, abs=3.0), f"at {freq} Hz"

    def test_60hz_attenuation_exceeds_40db(self):
        assert probe_attenuation_db(lambda r: lowpass_zero_phase(r, SPEC), 60.0) >= 40.0

    def test_passband_nearly_transparent(self):
        assert abs(probe_attenuation_db(lambda r: lowpass_zero_phase(r, SPEC), 1.0)) < 0.5

    def test_zero_phase_on_symmetric_pulse(self):
        n = 4001
        x = np.exp(-0.5 * ((np.arange(n) - n // 2) / 80.0) ** 2)
        y = lowpass_zero_phase(make_rec(x), SPEC).samples[0]
        lag = int(np.argmax(np.correlate(y, x, mode="full"))) - (n - 1)
        assert lag == 0
        assert int(np.argmax(y)) == n // 2

    def test_idempotent_on_slow_content(self):
        x = sine(0.5, 6000)
        once = lowpass_zero_phase(make_rec(x), SPEC).samples[0]
        twice = lowpass_zero_phase(make_rec(once), SPEC).samples[0]
        mid = slice(1000, 5000)
        assert np.max(np.abs(once[mid] - twice[mid])) < 1e-3

    def test_too_short_input_names_minimum(self):
        with pytest.raises(ValueError, match="10"):
            lowpass_zero_phase(make_rec(np.zeros(5)), SPEC)


class TestNotch:
    def test_60hz_attenuation_exceeds_30db(self):
        assert probe_attenuation_db(lambda r: notch(r, SPEC), 60.0) >= 30.0

    def test_narrow_band(self):
        # Q=30 notch is about 2 Hz wide; 5 Hz away it barely attenuates
        assert probe_attenuation_db(lambda r: notch(r, SPEC), 55.0) < 3.0
        assert probe_attenuation_db(lambda r: notch(r, SPEC), 10.0) < 0.5


class TestSavgol:
    @pytest.mark.parametrize("window", [51, 251])
    def test_exact_on_cubic(self, window):
        n = 2000
        t = np.arange(n) / FS
        x = 3.0 - 2.0 * t + 0.7 * t**2 - 0.1 * t**3
        y = savgol(x, window, 3)
        assert np.max(np.abs(y - x)) < 1e-9

    def test_attenuates_noise_variance(self):
        rng = np.random.default_rng(1)
        x = rng.normal(0.0, 2.0, 4000)
        y = savgol(x, SPEC.savgol_window, SPEC.savgol_order)
        assert np.var(y) < np.var(x) / 10.0

    def test_rowwise_on_two_channels(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(2, 1000))
        y = savgol(x, 51, 3)
        assert y.shape == x.shape
        assert np.allclose(y[0], savgol(x[0], 51, 3), atol=1e-12)

    def test_even_window_rejected_with_hint(self):
        with pytest.raises(ValueError, match="odd"):
            savgol(np.zeros(600), 250, 3)
        with pytest.raises(ValueError, match="odd"):
            FilterSpec(savgol_window=250)

    def test_short_signal_rejected(self):
        with pytest.raises(ValueError, match="shorter"):
            savgol(np.zeros(100), 251, 3)


class TestConditionChain:
    def test_composition(self):
        x = sine(3.0, 3000) + 0.5 * sine(60.0, 3000)
        got = condition(make_rec(x), SPEC).samples[0]
        want = notch(lowpass_zero_phase(make_rec(x), SPEC), SPEC).samples[0]
        assert np.array_equal(got, want)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-5.0, 5.0), st.floats(-5.0, 5.0))
    def test_linearity(self, a, b):
        rng = np.random.default_rng(7)
        x = rng.normal(size=2000)
        y = rng.normal(size=2000)
        lhs = condition(make_rec(a * x + b * y), SPEC).samples[0]
        rhs = a * condition(make_rec(x), SPEC).samples[0] + b * condition(
            make_rec(y), SPEC
        ).samples[0]
        assert np.max(np.abs(lhs - rhs)) < 1e-9 * max(1.0, abs(a) + abs(b))

    def test_white_noise_variance_reduction(self):
        # 10 Hz of a 250 Hz-wide noise band should survive, i.e. far less
        # than a tenth of the input variance
        rng = np.random.default_rng(3)
        reduced = 0
        for _ in range(20):
            x = rng.normal(0.0, 2.0, 3000)
            y = condition(make_rec(x), SPEC).samples[0]
            if np.var(y[500:2500]) < 4.0 / 10.0:
                reduced += 1
        assert reduced == 20

    def test_preserves_gesture_band(self):
        x = sine(1.5, 4000)
        y = condition(make_rec(x), SPEC).samples[0]
        mid = slice(1000, 3000)
        assert np.max(np.abs(y[mid])) > 0.9


class TestRecording:
    def test_validates_shape(self):
        with pytest.raises(ValueError, match=r"\(2, N\)"):
            Recording(np.zeros((3, 10)))

    def test_validates_finite(self):
        bad = np.zeros((2, 10))
        bad[1, 3] = np.inf
        with pytest.raises(ValueError, match="finite"):
            Recording(bad)

    def test_validates_sample_rate(self):
        with pytest.raises(ValueError):
            Recording(np.zeros((2, 10)), sample_rate=0.0)

    def test_properties(self):
        r = Recording(np.arange(20, dtype=float).reshape(2, 10), sample_rate=5.0)
        assert r.n_samples == 10
        assert r.duration_s == pytest.approx(2.0)
        assert np.array_equal(r.left, np.arange(10.0))
        assert np.array_equal(r.right, np.arange(10.0, 20.0))
        assert r.times()[1] - r.times()[0] == pytest.approx(0.2)

    def test_with_samples_replaces_data_only(self):
        r = Recording(np.zeros((2, 10)), sample_rate=250.0, start_time=5.0)
        r2 = r.with_samples(np.ones((2, 10)))
        assert r2.sample_rate == 250.0 and r2.start_time == 5.0
        assert np.all(r2.samples == 1.0)
