"""Shared fixtures. The trained models and corpora are expensive, so they
are built once per session and reused by the gesture, evaluation, CLI and
acceptance suites."""
from __future__ import annotations

import numpy as np
import pytest

from vergekit import evaluation, synth
from vergekit.gesture import fit_gesture_classifier


@pytest.fixture(scope="session")
def gate_dataset():
    return evaluation.make_gate_dataset()


@pytest.fixture(scope="session")
def gate_model(gate_dataset):
    return evaluation.train_gate(gate_dataset)


@pytest.fixture(scope="session")
def gesture_dataset():
    return evaluation.make_gesture_dataset()


@pytest.fixture(scope="session")
def forest_model(gesture_dataset):
    ds = gesture_dataset
    return fit_gesture_classifier(ds.features, ds.labels, ds.class_keys, seed=7)


@pytest.fixture(scope="session")
def clean_session():
    """A 10-round cued session plus its ground truth."""
    return synth.gen_session(synth.SessionSpec(seed=42, rounds=10))


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
