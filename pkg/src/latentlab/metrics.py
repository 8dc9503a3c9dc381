"""Performance metrics: score-based conditional entropy, AUROC, AUPRC.

The conditional-entropy estimate is the mean binary cross-entropy of the
model's scores in bits; for the true posterior it converges to H(Y|features),
and for any other scores it is an upper bound (proper scoring rule).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "MetricsError",
    "MetricsRecord",
    "CLIP_EPS",
    "score_conditional_entropy",
    "theoretical_floor",
    "auroc",
    "auprc",
]

CLIP_EPS = 1e-6


class MetricsError(ValueError):
    """Raised on invalid metric inputs."""


@dataclass(frozen=True)
class MetricsRecord:
    """One evaluated (strategy, budget) cell of an experiment iteration."""

    strategy: str
    budget: int
    cond_entropy_bits: float
    auroc: float
    auprc: float
    theoretical_floor_bits: float
    seed: int
    wall_time: float = 0.0


def score_conditional_entropy(y: np.ndarray, scores: np.ndarray) -> float:
    """Mean binary cross-entropy in bits, scores clipped to [1e-6, 1 - 1e-6].

    Upper-bounds the true conditional entropy of y given whatever produced the
    scores.
    """
    y = np.asarray(y, dtype=float)
    p = np.asarray(scores, dtype=float)
    if y.shape != p.shape or y.ndim != 1:
        raise MetricsError("labels and scores must be 1-D arrays of equal length")
    if p.min() < 0.0 or p.max() > 1.0:
        raise MetricsError("scores must lie in [0, 1]")
    p = np.clip(p, CLIP_EPS, 1.0 - CLIP_EPS)
    return float(-np.mean(y * np.log2(p) + (1.0 - y) * np.log2(1.0 - p)))


def theoretical_floor(gen_spec, config_probs) -> float:
    """H(Y | latent configuration) in bits: sum_p P(s_p) H_b(delta_p).

    config_probs is either an array over all 2^k configuration codes or a
    mapping {code: probability}.
    """
    delta = np.asarray(gen_spec.delta_table, dtype=float)
    if isinstance(config_probs, Mapping):
        probs = np.zeros(delta.size)
        for code, p in config_probs.items():
            probs[int(code)] = p
    else:
        probs = np.asarray(config_probs, dtype=float)
        if probs.size != delta.size:
            raise MetricsError("config_probs must cover all 2^k configuration codes")
    hb = np.zeros_like(delta)
    inside = (delta > 0) & (delta < 1)
    d = delta[inside]
    hb[inside] = -(d * np.log2(d) + (1 - d) * np.log2(1 - d))
    return float(probs @ hb)


def auroc(y: np.ndarray, scores: np.ndarray) -> float:
    """AUROC via the Mann-Whitney rank statistic with midrank tie handling."""
    y = np.asarray(y)
    s = np.asarray(scores, dtype=float)
    if y.shape != s.shape or y.ndim != 1:
        raise MetricsError("labels and scores must be 1-D arrays of equal length")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricsError("AUROC is undefined with a single class")
    ranks = _midranks(s)
    rank_sum = ranks[y == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=float)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auprc(y: np.ndarray, scores: np.ndarray) -> float:
    """Area under the precision-recall curve by step-wise integration.

    Sum over descending-score thresholds of (recall step) x precision, with
    ties processed as one block.
    """
    y = np.asarray(y)
    s = np.asarray(scores, dtype=float)
    if y.shape != s.shape or y.ndim != 1:
        raise MetricsError("labels and scores must be 1-D arrays of equal length")
    n_pos = int((y == 1).sum())
    if n_pos == 0:
        raise MetricsError("AUPRC is undefined without positives")
    order = np.argsort(-s, kind="mergesort")
    y_sorted = y[order]
    s_sorted = s[order]
    tp = np.cumsum(y_sorted)
    fp = np.cumsum(1 - y_sorted)
    # keep only the last index of each tied block
    last = np.flatnonzero(np.diff(s_sorted, append=np.nan) != 0)
    tp = tp[last]
    fp = fp[last]
    precision = tp / (tp + fp)
    recall = tp / n_pos
    return float(np.sum(np.diff(recall, prepend=0.0) * precision))
