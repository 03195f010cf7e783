"""numba implementations of the hot kernels. Same contracts as
_kernels_numpy; see that module for the documented semantics."""
from __future__ import annotations

import numpy as np
from numba import njit

SQRT2 = np.sqrt(2.0)


@njit(cache=True)
def peak_scan(dev, threshold, min_sep):
    n = dev.shape[0]
    out = np.empty(0, dtype=np.int64)
    if n < 3:
        return out
    cand = np.empty(n, dtype=np.int64)
    n_cand = 0
    for i in range(1, n - 1):
        if dev[i] > dev[i - 1] and dev[i] >= dev[i + 1] and dev[i] > threshold:
            cand[n_cand] = i
            n_cand += 1
    if n_cand == 0:
        return out
    cand = cand[:n_cand]
    amps = np.empty(n_cand, dtype=np.float64)
    for j in range(n_cand):
        amps[j] = -dev[cand[j]]
    order = np.argsort(amps, kind="mergesort")
    kept = np.empty(n_cand, dtype=np.int64)
    n_kept = 0
    for jj in range(n_cand):
        idx = cand[order[jj]]
        ok = True
        for k in range(n_kept):
            if abs(idx - kept[k]) < min_sep:
                ok = False
                break
        if ok:
            kept[n_kept] = idx
            n_kept += 1
    return np.sort(kept[:n_kept])


@njit(cache=True)
def haar_detail_energy(x, levels):
    a = x.astype(np.float64)
    energy = 0.0
    for _ in range(levels):
        half = a.shape[0] // 2
        if half == 0:
            break
        nxt = np.empty(half, dtype=np.float64)
        for i in range(half):
            d = (a[2 * i] - a[2 * i + 1]) / SQRT2
            energy += d * d
            nxt[i] = (a[2 * i] + a[2 * i + 1]) / SQRT2
        a = nxt
    return energy


@njit(cache=True)
def window_stats(x, dt):
    n = x.shape[0]
    s = 0.0
    mx = x[0]
    mn = x[0]
    s2 = 0.0
    for i in range(n):
        v = x[i]
        s += v
        s2 += v * v
        if v > mx:
            mx = v
        if v < mn:
            mn = v
    mean = s / n
    rms = np.sqrt(s2 / n)
    var = s2 / n - mean * mean
    if var < 0.0:
        var = 0.0
    peak = abs(mx)
    if abs(mn) > peak:
        peak = abs(mn)
    p2r = peak / rms if rms > 0.0 else 1.0
    integ = 0.0
    for i in range(n - 1):
        integ += 0.5 * (x[i] + x[i + 1]) * dt
    maxd = 0.0
    mind = 0.0
    if n > 1:
        maxd = (x[1] - x[0]) / dt
        mind = maxd
        for i in range(1, n - 1):
            d = (x[i + 1] - x[i]) / dt
            if d > maxd:
                maxd = d
            if d < mind:
                mind = d
    return mean, mx, mn, var, rms, p2r, integ, maxd, mind


@njit(cache=True)
def gini_split(values, labels, n_classes):
    n = values.shape[0]
    order = np.argsort(values, kind="mergesort")
    left_counts = np.zeros(n_classes, dtype=np.int64)
    total_counts = np.zeros(n_classes, dtype=np.int64)
    for i in range(n):
        total_counts[labels[i]] += 1
    best_impurity = np.inf
    best_thr = 0.0
    found = False
    for i in range(n - 1):
        left_counts[labels[order[i]]] += 1
        vi = values[order[i]]
        vj = values[order[i + 1]]
        if vi == vj:
            continue
        n_left = float(i + 1)
        n_right = float(n - i - 1)
        s_left = 0.0
        s_right = 0.0
        for c in range(n_classes):
            lc = float(left_counts[c])
            rc = float(total_counts[c] - left_counts[c])
            s_left += lc * lc
            s_right += rc * rc
        impurity = (n_left - s_left / n_left) + (n_right - s_right / n_right)
        if impurity < best_impurity:
            best_impurity = impurity
            best_thr = 0.5 * (vi + vj)
            found = True
    return best_thr, best_impurity, found


@njit(cache=True)
def tree_apply(X, feature, threshold, left, right, leaf_class):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for r in range(n):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = leaf_class[node]
    return out
