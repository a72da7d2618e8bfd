"""Training-data preparation: min-max rescaling and DBSCAN denoising.

The DBSCAN radius comes from an elbow rule on the sorted pairwise distances
and ``min_samples`` is 2% of the dataset size (at least 2).
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from hae.errors import ConfigurationError, DataError, UsageError

log = logging.getLogger(__name__)

NOISE = -1


@dataclass
class RescaleParams:
    minimum: np.ndarray
    maximum: np.ndarray

    @property
    def constant(self) -> np.ndarray:
        return self.maximum == self.minimum

    def transform(self, data) -> np.ndarray:
        """Affine map fitted on the training data; not clipped to [0, 1]."""
        X = np.asarray(data, dtype=float)
        span = np.where(self.constant, 1.0, self.maximum - self.minimum)
        out = (X - self.minimum) / span
        out[..., self.constant] = 0.0
        return out


def rescale_fit(data) -> RescaleParams:
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise UsageError("rescaling needs a non-empty matrix")
    return RescaleParams(X.min(axis=0), X.max(axis=0))


def rescale_fit_transform(data) -> tuple[RescaleParams, np.ndarray]:
    params = rescale_fit(data)
    return params, params.transform(data)


@dataclass
class DbscanConfig:
    eps: float
    min_samples: int = 2

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigurationError("eps must be positive")
        if self.min_samples < 1:
            raise ConfigurationError("min_samples must be at least 1")


def _knee(d: np.ndarray) -> int:
    second = d[2:] - 2 * d[1:-1] + d[:-2]
    return int(np.argmax(second)) + 1  # argmax returns the first maximum


def elbow_eps(data, mode: str = "pairwise", k: int = 4) -> float:
    """Radius at the knee of the ascending distance curve.

    The knee is the index maximizing the discrete second difference (first
    index on ties); the returned radius is the midpoint of the jump that
    follows it, so points separated by the knee gap are not neighbours.
    ``mode="kdist"`` uses each point's distance to its k-th neighbour
    instead of all pairwise distances.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[0] < 3:
        raise UsageError("elbow_eps needs at least 3 rows")
    if mode == "pairwise":
        d = np.sort(pdist(X))
    elif mode == "kdist":
        full = np.sort(squareform(pdist(X)), axis=1)
        d = np.sort(full[:, min(k, X.shape[0] - 1)])
    else:
        raise ConfigurationError(f"unknown elbow mode {mode!r}")
    scale = max(1.0, float(np.abs(X).max()))
    if d[-1] == d[0]:
        if d[0] > 0:
            return float(d[0])
        log.warning("all points coincide; using a machine-epsilon radius")
        return float(np.finfo(float).eps * scale)
    if len(d) < 3:
        return float(d[-1])
    i = _knee(d)
    eps = 0.5 * (d[i] + d[i + 1])
    if eps <= 0:
        eps = float(np.finfo(float).eps * scale)
    return float(eps)


def dbscan(data, config: DbscanConfig) -> np.ndarray:
    """Density-based clustering; noise is labelled ``-1``.

    A point's neighbourhood includes the point itself. Clusters are numbered
    in order of their first core point; a border point joins the first
    cluster that reaches it.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise UsageError("dbscan needs a non-empty matrix")
    n = X.shape[0]
    dist = squareform(pdist(X)) if n > 1 else np.zeros((1, 1))
    neighbours = [np.nonzero(row <= config.eps)[0] for row in dist]
    core = np.array([len(nb) >= config.min_samples for nb in neighbours])
    labels = np.full(n, NOISE)
    cluster = 0
    for i in range(n):
        if labels[i] != NOISE or not core[i]:
            continue
        labels[i] = cluster
        queue = deque([i])
        while queue:
            p = queue.popleft()
            for q in neighbours[p]:
                if labels[q] == NOISE:
                    labels[q] = cluster
                    if core[q]:
                        queue.append(q)
        cluster += 1
    return labels


def denoise(data, return_mask: bool = False, max_removed: float = 0.5):
    """Drop DBSCAN noise rows using the elbow radius and a 2% ``min_samples``."""
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[0] < 3:
        raise UsageError("denoise needs at least 3 rows")
    eps = elbow_eps(X)
    min_samples = max(2, math.ceil(0.02 * X.shape[0]))
    keep = dbscan(X, DbscanConfig(eps, min_samples)) != NOISE
    if not keep.any():
        raise DataError(
            f"every row was labelled noise (eps={eps:.4g}); set eps manually"
        )
    if keep.mean() < 1.0 - max_removed:
        raise DataError(
            f"denoising would remove {1 - keep.mean():.0%} of rows (eps={eps:.4g}); "
            "set eps manually"
        )
    return (X[keep], keep) if return_mask else X[keep]
