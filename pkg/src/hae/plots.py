"""SVG figures for run and sweep reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def loss_curves(report, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for r in report.repeats:
        ax.plot(np.arange(1, len(r.loss_history) + 1), r.loss_history, label=f"seed {r.seed}")
    ax.set_xlabel("epoch")
    ax.set_ylabel("reconstruction loss")
    ax.set_yscale("log")
    ax.legend()
    _save(fig, path)


def latent_scatter(latent, labels, path) -> None:
    fig, ax = plt.subplots(figsize=(4, 4))
    labels = np.asarray(labels, dtype=bool)
    ax.scatter(latent[~labels, 0], latent[~labels, 1], s=6, label="inlier")
    ax.scatter(latent[labels, 0], latent[labels, 1], s=12, marker="x", label="outlier")
    ax.set_xlabel("latent 0")
    ax.set_ylabel("latent 1")
    ax.legend()
    _save(fig, path)


def metric_bars(rows: dict, path) -> None:
    """Grouped precision/recall/F1 bars, one group per key of ``rows``."""
    names = list(rows)
    keys = ("precision", "recall", "f1")
    x = np.arange(len(names))
    width = 0.25
    fig, ax = plt.subplots(figsize=(max(4, 0.45 * len(names) + 2), 3.5))
    for i, key in enumerate(keys):
        ax.bar(x + (i - 1) * width, [rows[n].get(key, np.nan) for n in names], width, label=key)
    ax.set_xticks(x)
    ax.set_xticklabels(names)
    ax.set_ylim(0, 1)
    ax.legend()
    _save(fig, path)
