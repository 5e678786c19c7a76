"""Baseline display-selection strategies behind one sampler contract.

All samplers return K distinct ids drawn from the pool minus the excluded
set, with id-order tie-breaking so comparisons replay exactly.
"""

from __future__ import annotations

import numpy as np

from .rng import make_rng
from .scorer import Scorer, score_batch

STRATEGIES = ("vexad", "random", "maxmin", "uncertainty")


def _eligible(pool_ids, excluded, k: int) -> list[int]:
    avail = sorted(set(int(i) for i in pool_ids) - set(int(i) for i in excluded))
    if len(avail) < k:
        raise ValueError(f"pool has {len(avail)} eligible samples, need {k}")
    return avail


def sample_random(pool_ids, forbidden, k: int, seed: int) -> list[int]:
    """K ids uniformly without replacement, deterministic given seed."""
    avail = _eligible(pool_ids, forbidden, k)
    rng = make_rng("sampler-random", seed)
    picks = rng.choice(len(avail), size=k, replace=False)
    return [avail[int(i)] for i in picks]


def sample_maxmin(features, pool_ids, labeled_ids, k: int) -> list[int]:
    """Greedy farthest-point picks against the labeled set.

    Repeats K times: take the candidate maximizing its minimum squared
    distance to labeled-plus-already-picked samples; ties by smallest id.
    """
    labeled = sorted(set(int(i) for i in labeled_ids))
    if not labeled:
        raise ValueError("maxmin needs a nonempty labeled set")
    avail = _eligible(pool_ids, labeled, k)
    features = np.asarray(features, dtype=np.float64)
    cand = features[np.array(avail)]
    ref = features[np.array(labeled)]
    diffs = cand[:, None, :] - ref[None, :, :]
    min_d = np.einsum("crd,crd->cr", diffs, diffs).min(axis=1)
    chosen: list[int] = []
    taken = np.zeros(len(avail), dtype=bool)
    for _ in range(k):
        best = int(np.argmax(np.where(taken, -np.inf, min_d)))  # first max = smallest id
        taken[best] = True
        chosen.append(avail[best])
        d_new = np.einsum("cd,cd->c", cand - cand[best], cand - cand[best])
        min_d = np.minimum(min_d, d_new)
    return chosen


def sample_uncertainty(scorer: Scorer, features, pool_ids, forbidden, k: int) -> list[int]:
    """The K ids whose scores sit closest to 0.5; ties by smallest id."""
    avail = _eligible(pool_ids, forbidden, k)
    features = np.asarray(features, dtype=np.float64)
    ambiguity = np.abs(score_batch(scorer, features[np.array(avail)]) - 0.5)
    order = np.lexsort((np.array(avail), ambiguity))
    return [avail[int(i)] for i in order[:k]]
