"""Classification metrics, correlation, and multi-seed aggregation."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .errors import MBoEError


class ConstantSeriesError(MBoEError):
    """Correlation is undefined for a series with zero variance."""


def accuracy(preds: Sequence, golds: Sequence) -> float:
    """Fraction of exact matches."""
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} predictions, {len(golds)} golds")
    if not preds:
        raise ValueError("empty prediction list")
    return sum(1 for p, g in zip(preds, golds) if p == g) / len(preds)


def micro_f1(pred_sets: Sequence[Iterable], gold_sets: Sequence[Iterable]) -> float:
    """F1 over true/false positives and false negatives pooled across all
    examples and labels.

    Conventions: 0.0 when nothing is correct but something was predicted
    or expected; 1.0 when every set is empty on both sides (vacuously
    perfect; unreachable with pooled counting on real data).
    """
    if len(pred_sets) != len(gold_sets):
        raise ValueError(f"length mismatch: {len(pred_sets)} predictions, {len(gold_sets)} golds")
    tp = fp = fn = 0
    for pred, gold in zip(pred_sets, gold_sets):
        pred = set(pred)
        gold = set(gold)
        tp += len(pred & gold)
        fp += len(pred - gold)
        fn += len(gold - pred)
    if tp == 0:
        return 1.0 if fp == 0 and fn == 0 else 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise ValueError("need at least 2 points")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise ConstantSeriesError("correlation undefined for a constant series")
    return float((xc @ yc) / np.sqrt(sxx * syy))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation (average ranks for ties)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return pearson(_average_ranks(x), _average_ranks(y))


def mean_ci(values: Sequence[float], confidence: float = 0.95) -> tuple[float, float | None]:
    """Mean and the half-width of the two-sided Student-t confidence
    interval; half-width is None with fewer than 2 values."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("no values")
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, None
    sd = float(arr.std(ddof=1))
    t_crit = float(stats.t.ppf(0.5 + confidence / 2.0, arr.size - 1))
    return mean, t_crit * sd / float(np.sqrt(arr.size))


def rate_of_improvement(model_score: float, baseline_score: float, relative: bool = False) -> float:
    """Improvement of a model over its baseline, in metric points by
    default, or as a percentage of the baseline."""
    diff = model_score - baseline_score
    if not relative:
        return diff
    if baseline_score == 0:
        raise ValueError("relative improvement undefined for a zero baseline")
    return 100.0 * diff / baseline_score
