"""
PETE - Similarity Metrics
-------------------------
This module provides cosine similarity and the Pearson and Spearman
correlations used for STS evaluation, all accumulated at 64-bit precision.
"""

import numpy as np
from scipy import stats

from exceptions import EvaluationError


def cosine(u, v):
    """Cosine similarity clamped to [-1, 1].

    Args:
        u: Vector [d]
        v: Vector [d]

    Returns:
        u.v / (|u| |v|)
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise EvaluationError(f"cosine of vectors with different sizes {u.size} and {v.size}")
    norm_u, norm_v = np.linalg.norm(u), np.linalg.norm(v)
    if norm_u == 0 or norm_v == 0:
        raise EvaluationError("cosine of a zero vector is undefined")
    return float(np.clip(np.dot(u, v) / (norm_u * norm_v), -1.0, 1.0))


def _series(xs, ys):
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ys = np.asarray(ys, dtype=np.float64).ravel()
    if xs.size != ys.size:
        raise EvaluationError(f"series lengths differ: {xs.size} and {ys.size}")
    if xs.size < 2:
        raise EvaluationError(f"correlation needs at least 2 points, got {xs.size}")
    return xs, ys


def pearson(xs, ys):
    """Sample Pearson correlation."""
    xs, ys = _series(xs, ys)
    if np.ptp(xs) == 0 or np.ptp(ys) == 0:
        raise EvaluationError("undefined correlation: constant series")
    return float(np.corrcoef(xs, ys)[0, 1])


def spearman(xs, ys):
    """Pearson correlation of average-ranked series (ties share the mean rank)."""
    xs, ys = _series(xs, ys)
    return pearson(stats.rankdata(xs, method="average"), stats.rankdata(ys, method="average"))
