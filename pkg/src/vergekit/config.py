"""Run configuration: every empirically tuned constant in one validated
place, with a content hash that ties trained models to the settings they
were trained under.

Defaults follow the deployed hardware recipe: 500 Hz sampling, 10 Hz
third-order low-pass, 60 Hz notch, 2 s windows at a 0.1 s stride, MAD
multiplier 4.5, 30 mV peak threshold, 100-tree forest. Algorithms never
hard-code these; they take them from here (or from explicit arguments).
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field

from .sigcond import FilterSpec

ENV_CONFIG_PATH = "VERGEKIT_CONFIG"

CONFIG_FORMAT = "vergekit-config"
CONFIG_VERSION = 1


@dataclass(frozen=True)
class EvalThresholds:
    """Pass/fail floors used by the eval command's exit-code contract."""

    kfold_accuracy: float = 0.95
    cross_session_accuracy: float = 0.95
    cross_user_accuracy: float = 0.95
    fpr_preamble: float = 0.0
    snr_min_db: float = 5.0


@dataclass(frozen=True)
class RunConfig:
    sample_rate: float = 500.0
    lowpass_order: int = 3
    lowpass_cutoff_hz: float = 10.0
    notch_freq_hz: float = 60.0
    notch_q: float = 30.0
    savgol_window: int = 251
    savgol_order: int = 3
    window_s: float = 2.0
    step_s: float = 0.1
    gate_multiplier: float = 4.5
    mad_floor_mv: float = 1.0
    gate_l2: float = 1e-4
    peak_threshold_mv: float = 30.0
    min_separation_s: float = 0.5
    onset_walkback_frac: float = 0.05
    n_trees: int = 100
    max_depth: int | None = None
    bootstrap: bool = True
    brow_threshold_mv: float | None = None  # None: 2x the largest gesture
    refractory_s: float = 1.0
    ipd_mm: float = 50.0
    amplitude_gain_mv_per_deg: float = 15.0
    seed: int = 0
    thresholds: EvalThresholds = field(default_factory=EvalThresholds)

    def __post_init__(self) -> None:
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.window_s <= 0 or self.step_s <= 0:
            raise ValueError("window_s and step_s must be positive")
        if self.step_s > self.window_s:
            raise ValueError("step_s must not exceed window_s")
        if self.gate_multiplier <= 0:
            raise ValueError("gate_multiplier must be positive")
        if self.peak_threshold_mv <= 0:
            raise ValueError("peak_threshold_mv must be positive")
        if self.min_separation_s <= 0:
            raise ValueError("min_separation_s must be positive")
        if not 0 < self.onset_walkback_frac < 1:
            raise ValueError("onset_walkback_frac must lie in (0, 1)")
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.ipd_mm <= 0:
            raise ValueError("ipd_mm must be positive")
        # filter fields share FilterSpec's validation
        self.filter_spec()

    def filter_spec(self) -> FilterSpec:
        return FilterSpec(
            lowpass_order=self.lowpass_order,
            lowpass_cutoff_hz=self.lowpass_cutoff_hz,
            notch_freq_hz=self.notch_freq_hz,
            notch_q=self.notch_q,
            savgol_window=self.savgol_window,
            savgol_order=self.savgol_order,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        """sha256 over the canonical JSON rendering; identical configs hash
        identically regardless of field order in a source file."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def config_from_dict(d: dict) -> RunConfig:
    d = dict(d)
    thr = d.pop("thresholds", None)
    kwargs = dict(d)
    if thr is not None:
        kwargs["thresholds"] = EvalThresholds(**thr)
    return RunConfig(**kwargs)


def save_config(cfg: RunConfig, path: str) -> None:
    doc = {
        "format": CONFIG_FORMAT,
        "format_version": CONFIG_VERSION,
        "config": cfg.to_dict(),
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def load_config(path: str | None = None) -> RunConfig:
    """Load a config file; with no path, honor the environment variable,
    else return the defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG_PATH)
    if path is None:
        return RunConfig()
    with open(path) as f:
        doc = json.load(f)
    if doc.get("format") != CONFIG_FORMAT:
        raise ValueError(f"{path}: not a {CONFIG_FORMAT} file")
    if doc.get("format_version") != CONFIG_VERSION:
        raise ValueError(
            f"{path}: unsupported config version {doc.get('format_version')}"
        )
    return config_from_dict(doc["config"])
