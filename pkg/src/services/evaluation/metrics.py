"""Ranking and rating metrics."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from src.lib.errors import MetricError


def auc(scores: Sequence[float], labels: Sequence[float]) -> float:
    """Mann-Whitney AUC with average ranks for tied scores.

    Equals the probability that a random positive outscores a random
    negative, counting ties as one half. Undefined for single-class input.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.float64).ravel()
    if s.shape != y.shape:
        raise MetricError(f"auc: {s.size} scores vs {y.size} labels")
    if not np.isin(y, (0.0, 1.0)).all():
        raise MetricError("auc: labels must be 0 or 1")
    positives = int((y == 1.0).sum())
    negatives = int(y.size - positives)
    if positives == 0 or negatives == 0:
        raise MetricError("auc is undefined for single-class input")
    _, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    average_rank = ends - counts + (counts + 1) / 2.0
    ranks = average_rank[inverse.ravel()]
    rank_sum = float(ranks[y == 1.0].sum())
    return (rank_sum - positives * (positives + 1) / 2.0) / (positives * negatives)


def mae_rmse(preds: Sequence[float], truths: Sequence[float]) -> tuple[float, float]:
    p = np.asarray(preds, dtype=np.float64).ravel()
    t = np.asarray(truths, dtype=np.float64).ravel()
    if p.size == 0:
        raise MetricError("mae/rmse are undefined for empty input")
    if p.shape != t.shape:
        raise MetricError(f"mae_rmse: {p.size} predictions vs {t.size} truths")
    errors = p - t
    return float(np.mean(np.abs(errors))), math.sqrt(float(np.mean(errors * errors)))


__all__ = ["auc", "mae_rmse"]
