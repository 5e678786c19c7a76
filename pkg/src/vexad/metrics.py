"""Scalar accuracy metrics and the 2-decimal display conventions.

EER follows a fully pinned threshold convention: candidate thresholds are
the midpoints of consecutive distinct sorted scores plus the two infinities;
at each threshold FPR counts negatives scored >= theta and FNR positives
scored < theta; the winner minimizes |FPR - FNR|, with ties resolved by
smaller FPR + FNR and then smaller theta.  Scores are never auto-flipped,
so a worse-than-chance scorer reports an EER above 50.
"""

from __future__ import annotations

import math
from decimal import ROUND_DOWN, ROUND_HALF_UP, Decimal

import numpy as np


def eer(scores, labels) -> float:
    """Equal error rate in percent for scores against labels in {-1, +1}."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be matching 1-D sequences")
    pos = np.sort(scores[labels == 1])
    neg = np.sort(scores[labels == -1])
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("eer needs at least one sample of each class")

    uniq = np.unique(scores)
    thresholds = np.concatenate(([-np.inf], (uniq[:-1] + uniq[1:]) / 2.0, [np.inf]))
    fpr = (len(neg) - np.searchsorted(neg, thresholds, side="left")) / len(neg)
    fnr = np.searchsorted(pos, thresholds, side="left") / len(pos)
    best = np.lexsort((thresholds, fpr + fnr, np.abs(fpr - fnr)))[0]
    return float(100.0 * (fpr[best] + fnr[best]) / 2.0)


def sampling_rate(t: int, k: int, n: int) -> float:
    """Percent of the train half labeled after t displays of size k."""
    if t < 1:
        raise ValueError("t must be >= 1")
    return 100.0 * t * k / (n / 2.0)


def auc(records) -> float:
    """Arithmetic mean of EER values (accepts EvalRecords or raw floats)."""
    values = [float(getattr(r, "eer", r)) for r in records]
    if not values:
        raise ValueError("auc of an empty record list")
    return math.fsum(values) / len(values)


def render_metric(value: float) -> str:
    """EER/AUC display: two decimals, decimal half-up (10.465 -> '10.47')."""
    return str(Decimal(repr(float(value))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def render_rate(value: float) -> str:
    """Sampling-percent display: two decimals, truncated (14.5454 -> '14.54')."""
    return str(Decimal(repr(float(value))).quantize(Decimal("0.01"), rounding=ROUND_DOWN))
