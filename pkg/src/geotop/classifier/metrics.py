"""Classification and agreement metrics."""
from __future__ import annotations

import numpy as np


def _check_lengths(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"label vectors must be 1-D with equal length, got {a.shape} and {b.shape}")
    return a, b


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1) / 2.0


def contingency(a, b) -> np.ndarray:
    a, b = _check_lengths(a, b)
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def adjusted_rand_index(a, b) -> float:
    """Adjusted Rand index of two labelings (chance-corrected, in [-1, 1])."""
    a, b = _check_lengths(a, b)
    if a.size < 2:
        raise ValueError("ARI needs at least two items")
    table = contingency(a, b)
    sum_ij = _comb2(table).sum()
    sum_a = _comb2(table.sum(axis=1)).sum()
    sum_b = _comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / _comb2(a.size)
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))


def confusion_matrix(y_true, y_pred, n_classes: int = 2) -> np.ndarray:
    """Rows are true classes, columns predicted classes."""
    y_true, y_pred = _check_lengths(y_true, y_pred)
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true.astype(np.int64), y_pred.astype(np.int64)), 1)
    return cm


def f1_precision(y_true, y_pred, positive: int = 1) -> tuple[float, float]:
    """F1 score and precision of the positive class; zero denominators give 0."""
    y_true, y_pred = _check_lengths(y_true, y_pred)
    tp = int(np.sum((y_pred == positive) & (y_true == positive)))
    fp = int(np.sum((y_pred == positive) & (y_true != positive)))
    fn = int(np.sum((y_pred != positive) & (y_true == positive)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return f1, precision


def accuracy(y_true, y_pred) -> float:
    y_true, y_pred = _check_lengths(y_true, y_pred)
    if y_true.size == 0:
        raise ValueError("cannot score an empty set")
    return float(np.mean(y_true == y_pred))
