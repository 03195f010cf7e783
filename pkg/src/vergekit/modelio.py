"""Versioned JSON serialization for trained models.

Both model kinds share one envelope: format tag, format version, model kind,
the config hash the model was trained under, and a payload. Floats are
written with Python's shortest round-trip repr, so save -> load -> save is
byte-identical and loaded models predict bit-identically to the originals.
"""
from __future__ import annotations

import json
from typing import Any

import numpy as np

from .forest import ForestModel, TreeArrays
from .gate import ArtifactModel
from .normalize import NormStats

MODEL_FORMAT = "vergekit-model"
MODEL_VERSION = 1

KIND_GATE = "gate"
KIND_GESTURE = "gesture"


def _floats(a: np.ndarray) -> list[float]:
    return [float(v) for v in np.asarray(a, dtype=np.float64).ravel()]


def _ints(a: np.ndarray) -> list[int]:
    return [int(v) for v in np.asarray(a).ravel()]


def _gate_payload(m: ArtifactModel) -> dict[str, Any]:
    return {
        "weights": _floats(m.weights),
        "bias": float(m.bias),
        "norm_mean": _floats(m.norm_mean),
        "norm_std": _floats(m.norm_std),
        "l2": float(m.l2),
        "n_iter": int(m.n_iter),
    }


def _gate_from_payload(p: dict[str, Any]) -> ArtifactModel:
    return ArtifactModel(
        np.array(p["weights"], dtype=np.float64),
        float(p["bias"]),
        np.array(p["norm_mean"], dtype=np.float64),
        np.array(p["norm_std"], dtype=np.float64),
        float(p["l2"]),
        int(p["n_iter"]),
    )


def _tree_payload(t: TreeArrays) -> dict[str, Any]:
    return {
        "feature": _ints(t.feature),
        "threshold": _floats(t.threshold),
        "left": _ints(t.left),
        "right": _ints(t.right),
        "leaf_class": _ints(t.leaf_class),
        "leaf_counts": [_ints(row) for row in t.leaf_counts],
    }


def _tree_from_payload(p: dict[str, Any], n_classes: int) -> TreeArrays:
    counts = np.array(p["leaf_counts"], dtype=np.int64)
    if counts.size == 0:
        counts = counts.reshape(0, n_classes)
    return TreeArrays(
        np.array(p["feature"], dtype=np.int64),
        np.array(p["threshold"], dtype=np.float64),
        np.array(p["left"], dtype=np.int64),
        np.array(p["right"], dtype=np.int64),
        np.array(p["leaf_class"], dtype=np.int64),
        counts,
    )


def _forest_payload(m: ForestModel) -> dict[str, Any]:
    stats = None
    if m.norm_stats is not None:
        stats = {"mean": _floats(m.norm_stats.mean), "std": _floats(m.norm_stats.std)}
    return {
        "n_classes": int(m.n_classes),
        "class_keys": list(m.class_keys),
        "seed": int(m.seed),
        "params": dict(m.params),
        "norm_stats": stats,
        "trees": [_tree_payload(t) for t in m.trees],
    }


def _forest_from_payload(p: dict[str, Any]) -> ForestModel:
    stats = None
    if p.get("norm_stats") is not None:
        stats = NormStats(
            np.array(p["norm_stats"]["mean"], dtype=np.float64),
            np.array(p["norm_stats"]["std"], dtype=np.float64),
        )
    n_classes = int(p["n_classes"])
    return ForestModel(
        tuple(_tree_from_payload(t, n_classes) for t in p["trees"]),
        n_classes,
        tuple(p["class_keys"]),
        int(p["seed"]),
        stats,
        dict(p.get("params", {})),
    )


def model_kind(model: ArtifactModel | ForestModel) -> str:
    return KIND_GATE if isinstance(model, ArtifactModel) else KIND_GESTURE


def dumps_model(model: ArtifactModel | ForestModel, config_hash: str) -> str:
    if isinstance(model, ArtifactModel):
        kind, payload = KIND_GATE, _gate_payload(model)
    elif isinstance(model, ForestModel):
        kind, payload = KIND_GESTURE, _forest_payload(model)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    doc = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_VERSION,
        "kind": kind,
        "config_hash": config_hash,
        "payload": payload,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def save_model(path: str, model: ArtifactModel | ForestModel, config_hash: str) -> None:
    with open(path, "w") as f:
        f.write(dumps_model(model, config_hash))


def loads_model(text: str) -> tuple[ArtifactModel | ForestModel, str]:
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a {MODEL_FORMAT} document")
    if doc.get("format_version") != MODEL_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('format_version')}")
    kind = doc.get("kind")
    if kind == KIND_GATE:
        model: ArtifactModel | ForestModel = _gate_from_payload(doc["payload"])
    elif kind == KIND_GESTURE:
        model = _forest_from_payload(doc["payload"])
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    return model, str(doc.get("config_hash", ""))


def load_model(path: str) -> tuple[ArtifactModel | ForestModel, str]:
    """Returns (model, config_hash). Callers decide what a hash mismatch
    means; loading never enforces it."""
    with open(path) as f:
        return loads_model(f.read())
