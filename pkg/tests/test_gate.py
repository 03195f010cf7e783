"""Windowing, MAD activity gating, window features, and the logistic
artifact gate."""
import numpy as np
import pytest

from vergekit.gate import (
    ARTIFACT_FEATURE_NAMES,
    ArtifactModel,
    GateThreshold,
    LABEL_NOISE,
    LABEL_VERGENCE,
    Window,
    artifact_features,
    band_power,
    baseline_threshold,
    classify_window,
    fit_artifact_model,
    is_active,
    sliding_windows,
)
from vergekit.sigcond import FilterSpec, Recording, condition
from vergekit.synth import SessionSpec, gen_session

FS = 500.0


def _rec(arr):
    return Recording(np.asarray(arr, dtype=np.float64), sample_rate=FS)


# ---------------------------------------------------------------------------
# windowing


def test_window_count_five_seconds():
    # 2500 samples, 1000-sample window, 50-sample stride: 31 placements
    rec = _rec(np.zeros((2, 2500)))
    wins = sliding_windows(rec)
    assert len(wins) == 31
    assert [w.start_index for w in wins[:3]] == [0, 50, 100]
    assert wins[-1].start_index == 1500
    assert all(w.n_samples == 1000 for w in wins)


def test_window_start_times():
    rec = _rec(np.zeros((2, 2500)))
    wins = sliding_windows(rec)
    assert wins[1].start_time_s == pytest.approx(0.1)
    assert wins[-1].start_time_s == pytest.approx(3.0)


def test_short_recording_yields_no_windows():
    assert sliding_windows(_rec(np.zeros((2, 999)))) == []


def test_exactly_one_window():
    assert len(sliding_windows(_rec(np.zeros((2, 1000))))) == 1


def test_step_too_small_rejected():
    with pytest.raises(ValueError):
        sliding_windows(_rec(np.zeros((2, 2000))), step_s=1e-6)


def test_windows_are_views_of_the_recording():
    rec = _rec(np.arange(2 * 2500, dtype=np.float64).reshape(2, 2500))
    w = sliding_windows(rec)[3]
    assert np.shares_memory(w.samples, rec.samples)
    np.testing.assert_array_equal(w.samples, rec.samples[:, 150:1150])


def test_conditioned_window_keeps_position():
    rng = np.random.default_rng(0)
    w = sliding_windows(_rec(rng.normal(0, 1, (2, 2500))))[5]
    cw = w.conditioned()
    assert cw.start_index == w.start_index
    assert cw.n_samples == w.n_samples
    # lowpass removes variance
    assert cw.samples.var() < w.samples.var()


# ---------------------------------------------------------------------------
# baseline threshold


def test_gaussian_baseline_threshold_value():
    # MAD of N(0, sigma) is 0.6745 sigma, so the threshold sits near
    # 4.5 * 0.6745 * 2 = 6.07 mV
    rng = np.random.default_rng(1)
    rec = _rec(rng.normal(0.0, 2.0, (2, 5000)))
    t = baseline_threshold(rec)
    assert np.all(np.abs(t.threshold_mv / 6.07 - 1.0) < 0.15)
    assert np.all(np.abs(t.baseline_median_mv) < 0.3)


def test_constant_baseline_falls_back_to_floor():
    rec = _rec(np.full((2, 3000), 7.0))
    t = baseline_threshold(rec)
    np.testing.assert_array_equal(t.threshold_mv, [1.0, 1.0])
    np.testing.assert_array_equal(t.baseline_median_mv, [7.0, 7.0])


def test_baseline_uses_only_the_first_window():
    rng = np.random.default_rng(2)
    quiet = rng.normal(0.0, 1.0, (2, 1000))
    loud = rng.normal(0.0, 50.0, (2, 2000))
    t = baseline_threshold(_rec(np.concatenate([quiet, loud], axis=1)))
    assert np.all(t.threshold_mv < 5.0)


def test_too_short_for_baseline():
    with pytest.raises(ValueError, match="too short"):
        baseline_threshold(_rec(np.zeros((2, 500))))


def test_negative_threshold_rejected():
    with pytest.raises(ValueError):
        GateThreshold(np.array([-1.0, 1.0]), np.zeros(2))


# ---------------------------------------------------------------------------
# activity decision


def _window_of(arr):
    return Window(np.asarray(arr, dtype=np.float64), 0, FS)


def test_deviation_above_threshold_is_active():
    t = GateThreshold(np.array([5.0, 5.0]), np.zeros(2))
    x = np.zeros((2, 1000))
    x[0, 400] = 5.1
    assert is_active(_window_of(x), t)


def test_deviation_at_threshold_is_inactive():
    t = GateThreshold(np.array([5.0, 5.0]), np.zeros(2))
    x = np.zeros((2, 1000))
    x[1, 10] = 5.0
    assert not is_active(_window_of(x), t)


def test_deviation_measured_from_median_not_zero():
    t = GateThreshold(np.array([5.0, 5.0]), np.array([100.0, 100.0]))
    x = np.full((2, 1000), 100.0)
    assert not is_active(_window_of(x), t)
    x[0, 0] = 106.0
    assert is_active(_window_of(x), t)


def test_single_channel_suffices():
    t = GateThreshold(np.array([5.0, 5.0]), np.zeros(2))
    x = np.zeros((2, 1000))
    x[1, :] = 6.0
    assert is_active(_window_of(x), t)


def test_quiescent_conditioned_windows_stay_inactive():
    # raw-noise threshold, conditioned decisions: the 10 Hz lowpass removes
    # most wideband noise, so a quiet stream should produce no activations
    rng = np.random.default_rng(3)
    rec = _rec(rng.normal(0.0, 2.0, (2, 5000)))
    t = baseline_threshold(rec)
    cond = condition(rec, FilterSpec())
    assert not any(is_active(w, t) for w in sliding_windows(cond))


def test_gesture_pulse_activates_windows():
    spec = SessionSpec(rounds=1, seed=5)
    rec, truth = gen_session(spec)
    t = baseline_threshold(rec)
    cond = condition(rec, FilterSpec())
    active = [w for w in sliding_windows(cond) if is_active(w, t)]
    assert len(active) > 0


# ---------------------------------------------------------------------------
# features


def test_feature_names_order_is_fixed():
    per = (
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
    assert ARTIFACT_FEATURE_NAMES == tuple(
        f"{ch}_{n}" for ch in ("left", "right") for n in per
    )
    assert len(ARTIFACT_FEATURE_NAMES) == 22


def test_constant_window_features():
    f = artifact_features(_window_of(np.full((2, 1000), 3.0)))
    for c in (0, 1):
        b = f[11 * c : 11 * (c + 1)]
        assert b[0] == pytest.approx(3.0)  # mean
        assert b[1] == pytest.approx(3.0)  # max
        assert b[2] == pytest.approx(3.0)  # min
        assert b[5] == pytest.approx(0.0)  # variance
        assert b[6] == pytest.approx(3.0)  # rms
        assert b[7] == pytest.approx(1.0)  # peak-to-rms of a constant
        # integral of 3 mV over (1000-1)/500 s
        assert b[8] == pytest.approx(3.0 * 999 / 500)
        assert b[9] == 0.0 and b[10] == 0.0  # derivatives


def test_sine_window_features():
    t = np.arange(1000) / FS
    x = 10.0 * np.sin(2 * np.pi * 2.0 * t)
    f = artifact_features(_window_of(np.vstack([x, x])))
    left = f[:11]
    assert left[6] == pytest.approx(10.0 / np.sqrt(2.0), rel=1e-3)  # rms
    assert left[7] == pytest.approx(np.sqrt(2.0), rel=1e-3)  # crest factor
    # the 2 Hz tone lives inside the 0.5-10 Hz band almost entirely
    total = band_power(x, FS, 0.0, FS / 2)
    assert left[3] / total > 0.99


def test_time_reversal_swaps_and_negates_derivatives():
    rng = np.random.default_rng(4)
    x = rng.normal(0, 5, (2, 1000))
    f_fwd = artifact_features(_window_of(x))
    f_rev = artifact_features(_window_of(x[:, ::-1].copy()))
    for c in (0, 1):
        b, r = f_fwd[11 * c : 11 * (c + 1)], f_rev[11 * c : 11 * (c + 1)]
        # amplitude summaries unchanged
        for i in (0, 1, 2, 3, 5, 6, 7, 8):
            assert r[i] == pytest.approx(b[i], rel=1e-9)
        # max derivative of the reversal is minus the min derivative
        assert r[9] == pytest.approx(-b[10], rel=1e-9)
        assert r[10] == pytest.approx(-b[9], rel=1e-9)


def test_channels_summarized_independently():
    rng = np.random.default_rng(5)
    a = rng.normal(0, 1, 1000)
    b = rng.normal(0, 9, 1000)
    f1 = artifact_features(_window_of(np.vstack([a, b])))
    f2 = artifact_features(_window_of(np.vstack([a, np.zeros(1000)])))
    np.testing.assert_allclose(f1[:11], f2[:11], rtol=1e-12)


def test_band_power_parseval_bound():
    rng = np.random.default_rng(6)
    x = rng.normal(size=1000)
    assert 0.0 < band_power(x, FS) < band_power(x, FS, 0.0, FS / 2) + 1e-12


# ---------------------------------------------------------------------------
# logistic fit


def _toy_problem(n=400, seed=7):
    rng = np.random.default_rng(seed)
    X0 = rng.normal(-1.0, 1.0, (n // 2, 3))
    X1 = rng.normal(+1.0, 1.0, (n // 2, 3))
    X = np.vstack([X0, X1])
    y = np.concatenate([np.zeros(n // 2), np.ones(n // 2)])
    return X, y


def test_fit_separates_a_toy_problem():
    X, y = _toy_problem()
    m = fit_artifact_model(X, y)
    p = np.array([m.probability(x) for x in X])
    assert np.mean((p > 0.5) == (y == 1)) > 0.9


def test_duplicating_the_dataset_changes_nothing():
    # mean NLL + L2 penalty: the optimum is invariant under duplication
    X, y = _toy_problem()
    m1 = fit_artifact_model(X, y)
    m2 = fit_artifact_model(np.vstack([X, X]), np.concatenate([y, y]))
    np.testing.assert_allclose(m2.weights, m1.weights, rtol=1e-5, atol=1e-8)
    assert m2.bias == pytest.approx(m1.bias, rel=1e-5, abs=1e-8)


def test_label_flip_negates_the_model():
    X, y = _toy_problem()
    m1 = fit_artifact_model(X, y)
    m2 = fit_artifact_model(X, 1.0 - y)
    np.testing.assert_allclose(m2.weights, -m1.weights, rtol=1e-5, atol=1e-8)
    assert m2.bias == pytest.approx(-m1.bias, rel=1e-5, abs=1e-8)


def test_regularization_shrinks_weights():
    X, y = _toy_problem()
    w_light = np.linalg.norm(fit_artifact_model(X, y, l2=1e-6).weights)
    w_heavy = np.linalg.norm(fit_artifact_model(X, y, l2=1.0).weights)
    assert w_heavy < w_light


def test_gradient_actually_converged():
    X, y = _toy_problem()
    m = fit_artifact_model(X, y, tol=1e-6)
    # recompute the gradient of mean NLL + l2||w||^2 at the optimum
    Z = (X - m.norm_mean) / m.norm_std
    p = 1.0 / (1.0 + np.exp(-(Z @ m.weights + m.bias)))
    gw = Z.T @ (p - y) / len(y) + 2.0 * m.l2 * m.weights
    gb = np.sum(p - y) / len(y)
    assert np.max(np.abs(gw)) < 1e-6
    assert abs(gb) < 1e-6


def test_single_class_rejected():
    X, _ = _toy_problem()
    with pytest.raises(ValueError, match="single class"):
        fit_artifact_model(X, np.ones(len(X)))


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        fit_artifact_model(np.zeros((5, 3)), np.zeros(4))


def test_nonfinite_features_rejected():
    X, y = _toy_problem(n=10)
    X[0, 0] = np.nan
    with pytest.raises(ValueError, match="finite"):
        fit_artifact_model(X, y)


def test_tie_probability_resolves_to_noise():
    m = ArtifactModel(np.zeros(3), 0.0, np.zeros(3), np.ones(3), 1e-4, 1)
    label, p = classify_window(m, np.array([1.0, -2.0, 3.0]))
    assert p == 0.5
    assert label == LABEL_NOISE


def test_confident_vergence_label():
    m = ArtifactModel(np.array([10.0, 0.0, 0.0]), 0.0, np.zeros(3), np.ones(3), 1e-4, 1)
    label, p = classify_window(m, np.array([2.0, 0.0, 0.0]))
    assert label == LABEL_VERGENCE and p > 0.99


def test_probability_normalizes_inputs():
    m = ArtifactModel(
        np.array([1.0]), 0.0, np.array([100.0]), np.array([10.0]), 1e-4, 1
    )
    # (110 - 100) / 10 = 1 standard unit
    assert m.probability(np.array([110.0])) == pytest.approx(
        1.0 / (1.0 + np.exp(-1.0))
    )


def test_trained_gate_separates_held_out_rows(gate_dataset, gate_model):
    # crude check on the training pool itself; the grouped-split guarantee
    # lives in the acceptance suite
    X, y = gate_dataset.features, gate_dataset.labels
    p = np.array([gate_model.probability(x) for x in X])
    acc = np.mean((p > 0.5) == (y == 1))
    assert acc > 0.97
