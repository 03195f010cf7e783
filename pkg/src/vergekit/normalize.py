"""Per-feature z-score normalization with the training-split-only contract."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

STD_FLOOR = 1e-9


@dataclass(frozen=True)
class NormStats:
    """Column means and standard deviations of a training feature matrix.
    Degenerate (zero-variance) columns carry the 1e-9 floor."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.std) <= 0):
            raise ValueError("std entries must be positive")


def zscore_fit(train: np.ndarray) -> NormStats:
    """Fit column stats on the training split only. Zero-variance columns
    are floored at 1e-9 and flagged with a warning."""
    train = np.asarray(train, dtype=np.float64)
    if train.ndim != 2 or train.shape[0] < 1:
        raise ValueError("need a 2-D feature matrix with at least one row")
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    floored = std < STD_FLOOR
    if np.any(floored):
        warnings.warn(
            f"zero-variance feature columns floored at {STD_FLOOR}: "
            f"{np.flatnonzero(floored).tolist()}",
            stacklevel=2,
        )
        std = np.where(floored, STD_FLOOR, std)
    return NormStats(mean, std)


def zscore_apply(stats: NormStats, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.shape[-1] != stats.mean.shape[0]:
        raise ValueError(
            f"feature dimension {features.shape[-1]} does not match fitted "
            f"stats ({stats.mean.shape[0]})"
        )
    return (features - stats.mean) / stats.std
