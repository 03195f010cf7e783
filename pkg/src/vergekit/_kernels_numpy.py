"""Vectorized numpy implementations of the hot kernels.

These are the fallback path used when numba is unavailable or disabled via
VERGEKIT_NO_NUMBA. Integer-valued kernels (peak_scan, tree_apply, gini_split
boundaries) are bit-identical to the numba versions; float reductions may
differ in the last ulp because numpy sums pairwise.
"""
from __future__ import annotations

import numpy as np

SQRT2 = np.sqrt(2.0)


def peak_scan(dev, threshold, min_sep):
    """Indices of local maxima of `dev` above `threshold`, greedily thinned
    so surviving peaks are at least `min_sep` samples apart (larger peak
    wins; amplitude ties keep the earlier index). Returns ascending int64."""
    dev = np.asarray(dev, dtype=np.float64)
    n = dev.shape[0]
    if n < 3:
        return np.empty(0, dtype=np.int64)
    interior = dev[1:-1]
    # strict rise on the left, non-strict on the right: first sample of a
    # plateau is the candidate
    cand = np.flatnonzero(
        (interior > dev[:-2]) & (interior >= dev[2:]) & (interior > threshold)
    ) + 1
    if cand.size == 0:
        return cand.astype(np.int64)
    order = np.argsort(-dev[cand], kind="mergesort")
    kept = np.empty(cand.size, dtype=np.int64)
    n_kept = 0
    for j in order:
        idx = cand[j]
        ok = True
        for k in range(n_kept):
            if abs(idx - kept[k]) < min_sep:
                ok = False
                break
        if ok:
            kept[n_kept] = idx
            n_kept += 1
    return np.sort(kept[:n_kept])


def haar_detail_energy(x, levels):
    """Sum of squared Haar detail coefficients over `levels` dyadic levels.
    Odd tails at each level are dropped."""
    a = np.asarray(x, dtype=np.float64)
    energy = 0.0
    for _ in range(levels):
        half = a.shape[0] // 2
        if half == 0:
            break
        even = a[0 : 2 * half : 2]
        odd = a[1 : 2 * half : 2]
        d = (even - odd) / SQRT2
        energy += float(np.dot(d, d))
        a = (even + odd) / SQRT2
    return energy


def window_stats(x, dt):
    """Nine time-domain summary statistics of one channel.

    Returns (mean, max, min, variance, rms, peak_to_rms, trapezoid_integral,
    max_derivative, min_derivative). Derivatives are first differences scaled
    by 1/dt. peak_to_rms is defined as 1.0 for an all-zero signal.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    mean = float(np.mean(x))
    mx = float(np.max(x))
    mn = float(np.min(x))
    var = float(np.var(x))
    rms = float(np.sqrt(np.mean(x * x)))
    peak = max(abs(mx), abs(mn))
    p2r = peak / rms if rms > 0.0 else 1.0
    integ = float(np.trapezoid(x, dx=dt))
    if n > 1:
        d = np.diff(x) / dt
        maxd = float(np.max(d))
        mind = float(np.min(d))
    else:
        maxd = 0.0
        mind = 0.0
    return mean, mx, mn, var, rms, p2r, integ, maxd, mind


def gini_split(values, labels, n_classes):
    """Best binary split of one feature column by weighted Gini impurity.

    Returns (threshold, impurity, found) where impurity is the summed
    child impurity numerator n_L*(1 - sum p_L^2) + n_R*(1 - sum p_R^2),
    computed from exact integer class counts so the numba and numpy paths
    agree bit for bit. Ties keep the lowest threshold. found is False when
    every value is identical.
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = values.shape[0]
    order = np.argsort(values, kind="mergesort")
    v = values[order]
    lab = labels[order]
    boundaries = np.flatnonzero(v[:-1] != v[1:])
    if boundaries.size == 0:
        return 0.0, np.inf, False
    onehot = np.zeros((n, n_classes), dtype=np.int64)
    onehot[np.arange(n), lab] = 1
    prefix = np.cumsum(onehot, axis=0)
    total = prefix[-1]
    n_left = (boundaries + 1).astype(np.float64)
    n_right = n - n_left
    left_counts = prefix[boundaries].astype(np.float64)
    right_counts = (total - prefix[boundaries]).astype(np.float64)
    s_left = np.sum(left_counts * left_counts, axis=1)
    s_right = np.sum(right_counts * right_counts, axis=1)
    impurity = (n_left - s_left / n_left) + (n_right - s_right / n_right)
    best = int(np.argmin(impurity))
    i = boundaries[best]
    thr = 0.5 * (v[i] + v[i + 1])
    return float(thr), float(impurity[best]), True


def tree_apply(X, feature, threshold, left, right, leaf_class):
    """Route each row of X through one array-encoded tree.

    feature[node] < 0 marks a leaf whose prediction is leaf_class[node];
    internal nodes branch to left on X[:, feature] <= threshold.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    while True:
        feat = feature[node]
        active = feat >= 0
        if not np.any(active):
            break
        an = node[active]
        go_left = X[rows[active], feature[an]] <= threshold[an]
        node[active] = np.where(go_left, left[an], right[an])
    return leaf_class[node].astype(np.int64)
