"""Isolation forest written from scratch.

Trees are grown on random subsamples by picking a random feature and a
uniform threshold strictly between that feature's min and max on the node.
A point's anomaly score is ``2 ** (-E[h] / c(psi))`` where ``h`` is its path
length (plus ``c(size)`` credit at non-singleton leaves) and ``c`` is the
average unsuccessful-search path length of a binary search tree.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from hae.errors import ConfigurationError, UsageError

log = logging.getLogger(__name__)

EULER_GAMMA = 0.5772156649


def c_factor(m) -> float:
    """Average path length of an unsuccessful BST search among ``m`` points."""
    if m <= 1:
        return 0.0
    if m == 2:
        return 1.0
    return 2.0 * (math.log(m - 1) + EULER_GAMMA) - 2.0 * (m - 1) / m


_c_vec = np.vectorize(c_factor, otypes=[float])


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "Split | Leaf"
    right: "Split | Leaf"


@dataclass(frozen=True)
class Leaf:
    size: int
    depth: int


IsoNode = Split | Leaf


@dataclass
class IsoTree:
    """Flat array form of one isolation tree; ``feature == -1`` marks leaves."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    size: np.ndarray
    depth: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def as_nodes(self, i: int = 0) -> IsoNode:
        if self.feature[i] < 0:
            return Leaf(int(self.size[i]), int(self.depth[i]))
        return Split(
            int(self.feature[i]),
            float(self.threshold[i]),
            self.as_nodes(int(self.left[i])),
            self.as_nodes(int(self.right[i])),
        )

    def path_lengths(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=int)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] < self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active[idx] = self.feature[node[idx]] >= 0
        return self.depth[node] + _c_vec(self.size[node])


def build_tree(X: np.ndarray, height_limit: int, rng) -> IsoTree:
    """Grow one tree on all rows of ``X``.

    Nodes are expanded depth-first, left before right. At each split node the
    generator is asked for ``integers(k)`` (choice among the ``k`` features
    that are non-constant on the node) and then ``random()`` (threshold
    position). Recording those draws reproduces the tree exactly.
    """
    feature, threshold, left, right, size, depth = [], [], [], [], [], []

    def new_node(n_rows, d):
        for arr, v in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1),
                       (size, n_rows), (depth, d)):
            arr.append(v)
        return len(feature) - 1

    root = new_node(len(X), 0)
    stack = [(root, np.arange(len(X)))]
    while stack:
        node, rows = stack.pop()
        d = depth[node]
        if len(rows) <= 1 or d >= height_limit:
            continue
        sub = X[rows]
        lo, hi = sub.min(axis=0), sub.max(axis=0)
        candidates = np.nonzero(hi > lo)[0]
        if len(candidates) == 0:  # all rows duplicate
            continue
        q = int(candidates[int(rng.integers(len(candidates)))])
        u = 0.0
        while u == 0.0:
            u = float(rng.random())
        thr = lo[q] + u * (hi[q] - lo[q])
        if not lo[q] < thr < hi[q]:  # rounding at the interval edge
            thr = 0.5 * (lo[q] + hi[q])
        mask = sub[:, q] < thr
        feature[node], threshold[node] = q, thr
        left[node] = new_node(int(mask.sum()), d + 1)
        right[node] = new_node(int((~mask).sum()), d + 1)
        # right pushed first so the left subtree is expanded first
        stack.append((right[node], rows[~mask]))
        stack.append((left[node], rows[mask]))
    return IsoTree(
        np.array(feature, dtype=int),
        np.array(threshold, dtype=float),
        np.array(left, dtype=int),
        np.array(right, dtype=int),
        np.array(size, dtype=int),
        np.array(depth, dtype=int),
    )


@dataclass
class ForestConfig:
    n_trees: int = 100
    subsample_size: int = 256
    contamination: float = 0.1

    def __post_init__(self):
        if self.n_trees < 1 or self.subsample_size < 2:
            raise ConfigurationError("n_trees >= 1 and subsample_size >= 2 required")
        if not 0 < self.contamination <= 0.5:
            raise ConfigurationError("contamination must lie in (0, 0.5]")


@dataclass
class IsoForest:
    trees: list[IsoTree]
    n_features: int
    subsample_size: int
    contamination: float
    seed: int
    score_threshold: float = 0.5
    degenerate: bool = False
    n_trees: int = field(init=False)

    def __post_init__(self):
        self.n_trees = len(self.trees)

    @property
    def height_limit(self) -> int:
        return math.ceil(math.log2(self.subsample_size))


def fit(data, config: ForestConfig | None = None, seed: int = 0) -> IsoForest:
    config = config or ForestConfig()
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise UsageError("isolation forest needs a matrix with at least 2 rows")
    n = X.shape[0]
    psi = min(config.subsample_size, n)
    height = math.ceil(math.log2(psi))
    trees = []
    for child in np.random.SeedSequence(seed).spawn(config.n_trees):
        rng = np.random.default_rng(child)
        rows = np.arange(n) if psi == n else rng.choice(n, psi, replace=False)
        trees.append(build_tree(X[rows], height, rng))
    forest = IsoForest(trees, X.shape[1], psi, config.contamination, seed)
    scores = anomaly_scores(forest, X)
    forest.score_threshold = float(np.quantile(scores, 1.0 - config.contamination))
    if np.ptp(scores) == 0:
        forest.degenerate = True
        log.warning("all training scores are equal; the outlier threshold is degenerate")
    return forest


def anomaly_scores(forest: IsoForest, points) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[0] == 0:
        return np.zeros(0)
    if X.shape[1] != forest.n_features:
        raise UsageError(
            f"points have width {X.shape[1]}, forest was fit on {forest.n_features}"
        )
    mean_h = np.mean([t.path_lengths(X) for t in forest.trees], axis=0)
    return 2.0 ** (-mean_h / c_factor(forest.subsample_size))


def anomaly_score(forest: IsoForest, point) -> float:
    point = np.asarray(point, dtype=float)
    if point.ndim != 1:
        raise UsageError("anomaly_score takes a single vector")
    return float(anomaly_scores(forest, point)[0])


def predict(forest: IsoForest, points) -> np.ndarray:
    """Boolean outlier labels (``True`` = outlier)."""
    X = np.asarray(points, dtype=float)
    if X.size == 0:
        return np.zeros(0, dtype=bool)
    return anomaly_scores(forest, X) > forest.score_threshold


# ---------------------------------------------------------------------------
# persistence: trees concatenated into flat arrays with per-tree offsets

_TREE_FIELDS = ("feature", "threshold", "left", "right", "size", "depth")


def forest_arrays(forest: IsoForest, prefix: str = "forest.") -> dict:
    out = {f"{prefix}{name}": np.concatenate([getattr(t, name) for t in forest.trees])
           for name in _TREE_FIELDS}
    out[f"{prefix}offsets"] = np.cumsum([0] + [t.n_nodes for t in forest.trees])
    out[f"{prefix}params"] = np.array([
        forest.n_features, forest.subsample_size, forest.contamination,
        forest.seed, forest.score_threshold, float(forest.degenerate),
    ])
    return out


def forest_from_arrays(arrays: dict, prefix: str = "forest.") -> IsoForest:
    off = arrays[f"{prefix}offsets"]
    trees = []
    for a, b in zip(off[:-1], off[1:]):
        trees.append(IsoTree(*(np.array(arrays[f"{prefix}{name}"][a:b])
                               for name in _TREE_FIELDS)))
    nf, psi, cont, seed, thr, deg = arrays[f"{prefix}params"]
    return IsoForest(trees, int(nf), int(psi), float(cont), int(seed), float(thr), bool(deg))
