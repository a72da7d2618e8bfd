"""Precision, recall and F1 with outliers as the positive class."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from hae.errors import UsageError

DEFAULT_WINDOW = 3


@dataclass(frozen=True)
class EvalResult:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    degenerate: bool = False  # a zero denominator was replaced by 0

    def as_dict(self) -> dict:
        return asdict(self)


def from_counts(tp: int, fp: int, fn: int) -> EvalResult:
    degenerate = False
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision, degenerate = 0.0, True
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall, degenerate = 0.0, True
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return EvalResult(precision, recall, f1, int(tp), int(fp), int(fn), degenerate)


def prf(pred, truth) -> EvalResult:
    pred = np.asarray(pred).astype(bool)
    truth = np.asarray(truth).astype(bool)
    if pred.shape != truth.shape:
        raise UsageError(f"length mismatch: {pred.shape} vs {truth.shape}")
    tp = int(np.sum(pred & truth))
    return from_counts(tp, int(np.sum(pred & ~truth)), int(np.sum(~pred & truth)))


def windowed_prf(pred_times, truth_times, window: int = DEFAULT_WINDOW) -> EvalResult:
    """Match each alarm to the earliest unmatched event within ``window`` steps.

    Matching is one-to-one and greedy in time order.
    """
    pred = np.asarray(pred_times, dtype=np.int64)
    truth = np.asarray(truth_times, dtype=np.int64)
    if window < 0:
        raise UsageError("window must be non-negative")
    for name, arr in (("pred_times", pred), ("truth_times", truth)):
        if np.any(np.diff(arr) < 0):
            raise UsageError(f"{name} must be sorted")
    matched = np.zeros(len(truth), dtype=bool)
    tp = 0
    start = 0
    for t in pred:
        while start < len(truth) and (matched[start] or truth[start] < t - window):
            start += 1
        j = start
        while j < len(truth) and truth[j] <= t + window:
            if not matched[j] and abs(truth[j] - t) <= window:
                matched[j] = True
                tp += 1
                break
            j += 1
    return from_counts(tp, len(pred) - tp, len(truth) - tp)
