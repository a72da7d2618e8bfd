"""Synthetic clustered data with planted outliers."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from hae.errors import ConfigurationError

CENTER_SPACING = 10.0  # minimum distance between cluster centers, in sigma


@dataclass
class SynthConfig:
    n_features: int = 20
    n_clusters: int = 3
    n_inliers: int = 1000
    outlier_fraction: float = 0.05
    outlier_separation_sigma: float = 6.0
    seed: int = 0

    def __post_init__(self):
        if self.n_features < 1 or self.n_clusters < 1 or self.n_inliers < 1:
            raise ConfigurationError("n_features, n_clusters and n_inliers must be positive")
        if not 0 < self.outlier_fraction < 0.5:
            raise ConfigurationError("outlier_fraction must lie in (0, 0.5)")
        if self.outlier_separation_sigma < 0:
            raise ConfigurationError("outlier_separation_sigma must be non-negative")
        if self.n_clusters > 2**min(self.n_features, 30):
            raise ConfigurationError(
                f"{self.n_clusters} clusters do not fit on the {self.n_features}-cube"
            )

    @property
    def n_outliers(self) -> int:
        return int(round(self.n_inliers * self.outlier_fraction))


def cluster_centers(config: SynthConfig, rng) -> np.ndarray:
    """Distinct hypercube vertices scaled so centers sit >= 10 sigma apart."""
    d = config.n_features
    chosen: set[tuple[int, ...]] = set()
    while len(chosen) < config.n_clusters:
        chosen.add(tuple(int(b) for b in rng.integers(0, 2, size=d)))
    vertices = np.array(sorted(chosen), dtype=float)
    return CENTER_SPACING * vertices + rng.normal(size=d)


def generate(config: SynthConfig) -> tuple[np.ndarray, np.ndarray]:
    """Rows in shuffled order and a boolean outlier mask."""
    rng = np.random.default_rng(config.seed)
    centers = cluster_centers(config, rng)
    which = np.arange(config.n_inliers) % config.n_clusters
    inliers = centers[which] + rng.normal(size=(config.n_inliers, config.n_features))

    sep = config.outlier_separation_sigma
    outliers = []
    attempts = 0
    while len(outliers) < config.n_outliers:
        attempts += 1
        if attempts > 10000 * max(config.n_outliers, 1):
            raise ConfigurationError("could not place outliers at the requested separation")
        direction = rng.normal(size=config.n_features)
        direction /= np.linalg.norm(direction)
        radius = sep * (1.0 + rng.uniform(0.0, 1.0)) + 1e-9
        point = centers[rng.integers(config.n_clusters)] + radius * direction
        if np.min(np.linalg.norm(centers - point, axis=1)) >= sep:
            outliers.append(point)
    data = np.vstack([inliers] + ([np.array(outliers)] if outliers else []))
    labels = np.concatenate([np.zeros(config.n_inliers, bool), np.ones(len(outliers), bool)])
    order = rng.permutation(len(data))
    return data[order], labels[order]


def write_csv(path, data, labels=None, timestamps=None) -> None:
    data = np.asarray(data, dtype=float)
    header = [f"f{i}" for i in range(data.shape[1])]
    if timestamps is not None:
        header = ["timestamp"] + header
    if labels is not None:
        header.append("label")
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, row in enumerate(data):
            out = [repr(float(v)) for v in row]
            if timestamps is not None:
                out = [str(int(timestamps[i]))] + out
            if labels is not None:
                out.append(str(int(labels[i])))
            writer.writerow(out)
