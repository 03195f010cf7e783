"""Decision forest, written from scratch on array-encoded trees.

Each tree is five parallel arrays (split feature, threshold, left/right
child, leaf class) plus per-leaf class counts. Splits minimize weighted
Gini impurity over a random subset of sqrt(d) candidate features per node;
ties break toward the lowest threshold, then the lowest feature index, so
fits are bit-reproducible for a given seed. Prediction is a majority vote
over trees with ties resolved to the lowest class index.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .normalize import NormStats


@dataclass(frozen=True)
class TreeArrays:
    feature: np.ndarray  # (n_nodes,) int64, -1 marks a leaf
    threshold: np.ndarray  # (n_nodes,) float64
    left: np.ndarray  # (n_nodes,) int64
    right: np.ndarray  # (n_nodes,) int64
    leaf_class: np.ndarray  # (n_nodes,) int64, -1 on internal nodes
    leaf_counts: np.ndarray  # (n_nodes, n_classes) int64


@dataclass(frozen=True)
class ForestModel:
    """Immutable fitted forest. class_keys maps class indices to label
    strings; norm_stats, when present, are the z-score stats the features
    were normalized with at fit time."""

    trees: tuple[TreeArrays, ...]
    n_classes: int
    class_keys: tuple[str, ...]
    seed: int
    norm_stats: NormStats | None = None
    params: dict = field(default_factory=dict)

    @property
    def n_trees(self) -> int:
        return len(self.trees)


class _TreeBuilder:
    def __init__(self, X, y, n_classes, max_features, max_depth, rng):
        self.X = X
        self.y = y
        self.n_classes = n_classes
        self.max_features = max_features
        self.max_depth = max_depth
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.leaf_class: list[int] = []
        self.leaf_counts: list[np.ndarray] = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_class.append(-1)
        self.leaf_counts.append(np.zeros(self.n_classes, dtype=np.int64))
        return len(self.feature) - 1

    def build(self, idx: np.ndarray) -> None:
        # iterative preorder growth; recursion would cap tree depth at the
        # interpreter limit on adversarial (e.g. label-shuffled) data
        root = self._new_node()
        stack = [(root, idx, 0)]
        while stack:
            node, node_idx, depth = stack.pop()
            split = self._try_split(node, node_idx, depth)
            if split is None:
                continue
            left_idx, right_idx = split
            lnode = self._new_node()
            rnode = self._new_node()
            self.left[node] = lnode
            self.right[node] = rnode
            stack.append((rnode, right_idx, depth + 1))
            stack.append((lnode, left_idx, depth + 1))

    def _try_split(self, node: int, idx: np.ndarray, depth: int):
        y_node = self.y[idx]
        counts = np.bincount(y_node, minlength=self.n_classes).astype(np.int64)
        self.leaf_counts[node] = counts
        pure = np.count_nonzero(counts) <= 1
        depth_stop = self.max_depth is not None and depth >= self.max_depth
        if pure or idx.size < 2 or depth_stop:
            self.leaf_class[node] = int(np.argmax(counts))
            return None
        d = self.X.shape[1]
        if self.max_features >= d:
            cand = np.arange(d)
        else:
            cand = np.sort(self.rng.choice(d, size=self.max_features, replace=False))
        best = None
        for f in cand:
            thr, imp, ok = kernels.gini_split(
                np.ascontiguousarray(self.X[idx, f]), y_node.astype(np.int64), self.n_classes
            )
            if ok and (best is None or imp < best[1]):
                best = (float(thr), float(imp), int(f))
        if best is None:
            self.leaf_class[node] = int(np.argmax(counts))
            return None
        thr, _, f = best
        go_left = self.X[idx, f] <= thr
        self.feature[node] = f
        self.threshold[node] = thr
        return idx[go_left], idx[~go_left]

    def arrays(self) -> TreeArrays:
        return TreeArrays(
            np.asarray(self.feature, dtype=np.int64),
            np.asarray(self.threshold, dtype=np.float64),
            np.asarray(self.left, dtype=np.int64),
            np.asarray(self.right, dtype=np.int64),
            np.asarray(self.leaf_class, dtype=np.int64),
            np.stack(self.leaf_counts).astype(np.int64),
        )


def fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    class_keys: tuple[str, ...],
    n_trees: int = 100,
    seed: int = 0,
    max_features: int | None = None,
    max_depth: int | None = None,
    bootstrap: bool = True,
    norm_stats: NormStats | None = None,
) -> ForestModel:
    """Fit a seeded forest on integer class labels in [0, len(class_keys)).

    max_features defaults to floor(sqrt(d)). bootstrap draws n samples with
    replacement per tree; turning it off grows every tree on the full data,
    which makes a single depth-1 tree equal the brute-force best stump.
    """
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X and y shapes disagree")
    if X.shape[0] == 0:
        raise ValueError("training set is empty")
    n_classes = len(class_keys)
    if np.unique(y).size < 2:
        raise ValueError("need at least two classes in the training labels")
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError("labels must index class_keys")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    n, d = X.shape
    m = max_features if max_features is not None else max(1, int(np.sqrt(d)))
    master = np.random.default_rng(seed)
    trees = []
    for _ in range(n_trees):
        tree_rng = np.random.default_rng(int(master.integers(0, 2**63 - 1)))
        idx = tree_rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        builder = _TreeBuilder(X, y, n_classes, m, max_depth, tree_rng)
        builder.build(np.asarray(idx, dtype=np.int64))
        trees.append(builder.arrays())
    return ForestModel(
        trees=tuple(trees),
        n_classes=n_classes,
        class_keys=tuple(class_keys),
        seed=seed,
        norm_stats=norm_stats,
        params={
            "n_trees": n_trees,
            "max_features": m,
            "max_depth": max_depth,
            "bootstrap": bootstrap,
        },
    )


def predict_votes(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Per-class vote fractions, shape (n_rows, n_classes)."""
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    votes = np.zeros((X.shape[0], model.n_classes))
    for tree in model.trees:
        pred = kernels.tree_apply(
            X, tree.feature, tree.threshold, tree.left, tree.right, tree.leaf_class
        )
        votes[np.arange(X.shape[0]), pred] += 1.0
    return votes / model.n_trees


def predict(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Majority-vote class indices; ties go to the lowest class index."""
    return np.argmax(predict_votes(model, X), axis=1)
