"""Evaluation measures: AUC, F1, MSE, accuracy."""
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

__all__ = ["EvalResult", "auc", "f1", "macro_f1", "mse", "accuracy", "evaluate", "METRICS"]


@dataclass(frozen=True)
class EvalResult:
    metric: str
    value: float
    n_evaluated: int

    def as_row(self):
        return f"{self.metric},{self.value!r},{self.n_evaluated}"


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return a, b


def auc(scores, labels):
    """Area under the ROC curve via the Mann-Whitney U statistic.

    Ties between a positive and a negative score count one half.
    """
    scores, labels = _pair(scores, labels)
    pos = labels > 0
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both positive and negative labels")
    ranks = rankdata(scores, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def f1(pred, labels):
    """F1 score of the +1 class; 0 when precision + recall is 0."""
    pred, labels = _pair(pred, labels)
    tp = float(np.sum((pred > 0) & (labels > 0)))
    fp = float(np.sum((pred > 0) & (labels <= 0)))
    fn = float(np.sum((pred <= 0) & (labels > 0)))
    if tp == 0.0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall)


def macro_f1(pred, labels):
    """Per-column F1 averaged over the columns of 2-d label matrices."""
    pred = np.atleast_2d(np.asarray(pred, dtype=np.float64))
    labels = np.atleast_2d(np.asarray(labels, dtype=np.float64))
    if pred.shape != labels.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {labels.shape}")
    return float(np.mean([f1(pred[:, j], labels[:, j]) for j in range(pred.shape[1])]))


def mse(pred, labels):
    pred, labels = _pair(pred, labels)
    if pred.size == 0:
        raise ValueError("MSE of an empty sample")
    return float(np.mean((pred - labels) ** 2))


def accuracy(pred, labels):
    pred, labels = _pair(pred, labels)
    if pred.size == 0:
        raise ValueError("accuracy of an empty sample")
    return float(np.mean(np.sign(pred) == np.sign(labels)))


METRICS = {"auc": auc, "f1": f1, "mse": mse, "acc": accuracy}


def evaluate(model, ds, metric, threshold=0.0):
    """Score `model` on `ds`; AUC and MSE use raw predictions, F1 and
    accuracy use thresholded classes."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {sorted(METRICS)}")
    scores = model.predict(ds.features)
    if metric in ("f1", "acc"):
        scores = np.where(scores >= threshold, 1.0, -1.0)
    return EvalResult(metric, METRICS[metric](scores, ds.responses), ds.n)
