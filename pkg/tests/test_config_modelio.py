"""Config hashing/round-trips and model serialization, including the
bit-identical-prediction guarantee after a save/load cycle."""
import json
import os

import numpy as np
import pytest

from vergekit.config import (
    ENV_CONFIG_PATH,
    EvalThresholds,
    RunConfig,
    config_from_dict,
    load_config,
    save_config,
)
from vergekit.forest import fit_forest, predict_votes
from vergekit.gate import fit_artifact_model
from vergekit.gesture import classify, fit_gesture_classifier
from vergekit.modelio import (
    KIND_GATE,
    KIND_GESTURE,
    dumps_model,
    load_model,
    loads_model,
    model_kind,
    save_model,
)


# ---------------------------------------------------------------------------
# config


def test_default_config_values():
    cfg = RunConfig()
    assert cfg.sample_rate == 500.0
    assert cfg.lowpass_cutoff_hz == 10.0
    assert cfg.notch_freq_hz == 60.0
    assert cfg.savgol_window == 251
    assert cfg.window_s == 2.0 and cfg.step_s == 0.1
    assert cfg.gate_multiplier == 4.5
    assert cfg.peak_threshold_mv == 30.0
    assert cfg.n_trees == 100
    assert cfg.ipd_mm == 50.0
    assert cfg.thresholds.kfold_accuracy == 0.95


def test_config_validation():
    with pytest.raises(ValueError, match="sample_rate"):
        RunConfig(sample_rate=0)
    with pytest.raises(ValueError, match="step_s must not exceed"):
        RunConfig(window_s=0.5, step_s=1.0)
    with pytest.raises(ValueError, match="walkback"):
        RunConfig(onset_walkback_frac=1.5)
    with pytest.raises(ValueError):
        RunConfig(savgol_window=250)  # even smoothing window


def test_hash_is_stable_and_content_sensitive():
    a, b = RunConfig(), RunConfig()
    assert a.config_hash() == b.config_hash()
    assert len(a.config_hash()) == 64
    c = RunConfig(peak_threshold_mv=31.0)
    assert c.config_hash() != a.config_hash()
    d = RunConfig(thresholds=EvalThresholds(kfold_accuracy=0.9))
    assert d.config_hash() != a.config_hash()


def test_config_file_roundtrip(tmp_path):
    cfg = RunConfig(peak_threshold_mv=25.0, seed=3)
    p = str(tmp_path / "cfg.json")
    save_config(cfg, p)
    back = load_config(p)
    assert back == cfg
    assert back.config_hash() == cfg.config_hash()


def test_config_from_dict_rebuilds_thresholds():
    cfg = RunConfig(thresholds=EvalThresholds(snr_min_db=7.0))
    back = config_from_dict(cfg.to_dict())
    assert isinstance(back.thresholds, EvalThresholds)
    assert back == cfg


def test_load_config_honors_env(tmp_path, monkeypatch):
    cfg = RunConfig(seed=42)
    p = str(tmp_path / "env.json")
    save_config(cfg, p)
    monkeypatch.setenv(ENV_CONFIG_PATH, p)
    assert load_config() == cfg
    monkeypatch.delenv(ENV_CONFIG_PATH)
    assert load_config() == RunConfig()


def test_load_config_rejects_foreign_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"hello": 1}\n')
    with pytest.raises(ValueError, match="not a vergekit-config"):
        load_config(str(p))


def test_load_config_rejects_future_version(tmp_path):
    p = tmp_path / "v.json"
    p.write_text(
        json.dumps({"format": "vergekit-config", "format_version": 99, "config": {}})
    )
    with pytest.raises(ValueError, match="version 99"):
        load_config(str(p))


# ---------------------------------------------------------------------------
# model envelopes


def _gate():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(-1, 1, (60, 4)), rng.normal(1, 1, (60, 4))])
    y = np.repeat([0.0, 1.0], 60)
    return fit_artifact_model(X, y), X


def _forest():
    rng = np.random.default_rng(1)
    X = np.vstack([rng.normal(3 * c, 1, (40, 5)) for c in range(3)])
    y = np.repeat(np.arange(3), 40)
    return fit_gesture_classifier(X, y, ("a", "b", "c"), n_trees=10, seed=2), X


def test_gate_roundtrip_is_byte_identical_and_bit_equal(tmp_path):
    m, X = _gate()
    p = str(tmp_path / "gate.json")
    save_model(p, m, "hash1")
    back, h = load_model(p)
    assert h == "hash1"
    assert model_kind(back) == KIND_GATE
    for x in X[:10]:
        assert back.probability(x) == m.probability(x)
    assert dumps_model(back, h) == open(p).read()


def test_forest_roundtrip_is_byte_identical_and_bit_equal(tmp_path):
    m, X = _forest()
    p = str(tmp_path / "forest.json")
    save_model(p, m, "hash2")
    back, h = load_model(p)
    assert h == "hash2"
    assert model_kind(back) == KIND_GESTURE
    assert back.class_keys == m.class_keys
    assert back.params == m.params
    np.testing.assert_array_equal(
        predict_votes(back, (X[:20] - m.norm_stats.mean) / m.norm_stats.std),
        predict_votes(m, (X[:20] - m.norm_stats.mean) / m.norm_stats.std),
    )
    for x in X[:10]:
        l1, v1 = classify(m, x)
        l2, v2 = classify(back, x)
        assert l1 == l2
        np.testing.assert_array_equal(v1, v2)
    assert dumps_model(back, h) == open(p).read()


def test_forest_without_norm_stats_roundtrips(tmp_path):
    rng = np.random.default_rng(3)
    X = np.vstack([rng.normal(-2, 1, (30, 3)), rng.normal(2, 1, (30, 3))])
    m = fit_forest(X, np.repeat([0, 1], 30), ("a", "b"), n_trees=3, seed=0)
    assert m.norm_stats is None
    p = str(tmp_path / "f.json")
    save_model(p, m, "")
    back, _ = load_model(p)
    assert back.norm_stats is None
    np.testing.assert_array_equal(predict_votes(back, X), predict_votes(m, X))


def test_envelope_fields():
    m, _ = _gate()
    doc = json.loads(dumps_model(m, "abcd"))
    assert doc["format"] == "vergekit-model"
    assert doc["format_version"] == 1
    assert doc["kind"] == "gate"
    assert doc["config_hash"] == "abcd"
    assert set(doc["payload"]) == {"weights", "bias", "norm_mean", "norm_std", "l2", "n_iter"}


def test_loads_rejects_wrong_format():
    with pytest.raises(ValueError, match="not a vergekit-model"):
        loads_model('{"format": "something"}')


def test_loads_rejects_future_version():
    with pytest.raises(ValueError, match="version 2"):
        loads_model('{"format": "vergekit-model", "format_version": 2}')


def test_loads_rejects_unknown_kind():
    doc = {"format": "vergekit-model", "format_version": 1, "kind": "mystery", "payload": {}}
    with pytest.raises(ValueError, match="unknown model kind 'mystery'"):
        loads_model(json.dumps(doc))


def test_dumps_rejects_foreign_objects():
    with pytest.raises(TypeError, match="dict"):
        dumps_model({}, "")
