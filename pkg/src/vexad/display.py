"""Display synthesis by fixed-point minimization.

Each annotation round needs K samples to show the oracle.  Instead of
ranking the unlabeled pool directly, we synthesize K exemplar points in
feature space that trade off three pulls:

* representativity - exemplars should sit where the data mass is
  (membership-weighted squared distances),
* diversity - the per-exemplar membership masses should spread out
  (negative entropy of the column sums),
* ambiguity - exemplars should sit near the scorer's decision boundary
  (negative entropy of the class scores at the exemplars),

with an entropy regularizer on the membership rows that makes both update
steps closed-form.  Memberships live on the probability simplex row-wise.
The solver alternates the two closed-form updates Jacobi-style (both new
iterates computed from the old pair) until the combined L1 change of the
membership matrix and the exemplar matrix drops below epsilon.  The
converged exemplars are then mapped to their nearest real, still-unlabeled
samples to form the display.

Matrix conventions: X is d x n (columns are samples), V is d x K (columns
are exemplars), mu is n x K with rows on the simplex.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import make_rng
from .scorer import Scorer, score_batch, score_gradient

MASS_EPS = 1e-12        # lower clamp for membership column sums
XLOGX_TINY = 1e-300     # below this, x*log(x) is taken as 0
ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ObjectiveWeights:
    rep_on: int = 1
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.rep_on not in (0, 1):
            raise ValueError("rep_on must be 0 or 1")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be >= 0")
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")

    def to_json(self) -> dict:
        return {"rep_on": self.rep_on, "alpha": self.alpha,
                "beta": self.beta, "gamma": self.gamma}

    @staticmethod
    def from_json(obj: dict) -> "ObjectiveWeights":
        return ObjectiveWeights(rep_on=int(obj["rep_on"]), alpha=float(obj["alpha"]),
                                beta=float(obj["beta"]), gamma=float(obj["gamma"]))


@dataclass
class SolveReport:
    iterations: int
    final_delta: float
    converged: bool
    objective_trace: list[float] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"iterations": self.iterations, "final_delta": self.final_delta,
                "converged": self.converged, "objective_trace": self.objective_trace}


def check_membership(mu: np.ndarray, tol: float = ROW_SUM_TOL) -> None:
    """Validate the row-simplex invariants; raises ValueError on violation."""
    if mu.ndim != 2:
        raise ValueError("membership matrix must be 2-D")
    if np.any(mu < 0):
        raise ValueError("membership entries must be nonnegative")
    sums = mu.sum(axis=1)
    if np.max(np.abs(sums - 1.0)) > tol:
        raise ValueError("membership rows must sum to 1")


def sq_dist(V: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, entry (k, i) = ||x_i - V_k||^2.

    Computed from explicit differences (not the expanded-norms identity) so
    results match a naive per-entry loop to near machine precision.
    """
    V = np.asarray(V, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if V.ndim != 2 or X.ndim != 2 or V.shape[0] != X.shape[0]:
        raise ValueError(f"dimension mismatch: V {V.shape} vs X {X.shape}")
    diff = V.T[:, None, :] - X.T[None, :, :]      # (K, n, d)
    return np.einsum("kid,kid->ki", diff, diff)


def _xlogx(a: np.ndarray) -> np.ndarray:
    return np.where(a > XLOGX_TINY, a * np.log(np.maximum(a, XLOGX_TINY)), 0.0)


def objective(X, V, mu, scorer: Scorer, w: ObjectiveWeights) -> float:
    """Scalar objective value for the current (V, mu) pair."""
    X = np.asarray(X, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if not (np.isfinite(X).all() and np.isfinite(V).all() and np.isfinite(mu).all()):
        raise ValueError("objective inputs must be finite")
    check_membership(mu)

    rep = float(np.sum(mu * sq_dist(V, X).T)) if w.rep_on else 0.0
    col_mass = mu.sum(axis=0)                      # unnormalized column sums
    div = float(np.sum(_xlogx(col_mass)))
    f = score_batch(scorer, V.T)
    amb = float(np.sum(_xlogx(f) + _xlogx(1.0 - f)))
    ent = float(np.sum(_xlogx(mu)))
    return w.rep_on * rep + w.alpha * div + w.beta * amb + w.gamma * ent


def update_membership(X, V_tau, mu_tau, w: ObjectiveWeights) -> np.ndarray:
    """One closed-form membership update; output rows lie on the simplex.

    Row i is proportional to exp(-(dist_ik + alpha*(1 + log mass_k)) / gamma)
    where dist uses the previous exemplars and mass the previous column
    sums.  Evaluated in log space with per-row max subtraction - row
    normalization cancels any per-row additive constant, so the stabilized
    result equals naive exponentiation wherever the latter does not
    underflow.
    """
    D = sq_dist(V_tau, X).T                        # (n, K)
    col_mass = np.maximum(np.asarray(mu_tau).sum(axis=0), MASS_EPS)
    logits = -(w.rep_on * D + w.alpha * (1.0 + np.log(col_mass))[None, :]) / w.gamma
    if not np.isfinite(logits).all():
        raise ValueError("non-finite membership exponent")
    logits -= logits.max(axis=1, keepdims=True)
    mu_new = np.exp(logits)
    mu_new /= mu_new.sum(axis=1, keepdims=True)
    return mu_new


def update_exemplars(X, V_tau, mu_tau, scorer: Scorer, w: ObjectiveWeights) -> np.ndarray:
    """One closed-form exemplar update.

    Columns are the membership-weighted data means, plus (for beta > 0) an
    ambiguity force assembled from both class-score gradients; the two
    class terms combine to f(1-f) * log(f / (1-f)) * weights per column,
    which vanishes exactly where f = 0.5.
    """
    X = np.asarray(X, dtype=np.float64)
    mu_tau = np.asarray(mu_tau, dtype=np.float64)
    V_hat = w.rep_on * (X @ mu_tau)
    if w.beta > 0:
        f = score_batch(scorer, np.asarray(V_tau).T)
        grad_c1, grad_c2 = score_gradient(scorer, V_tau)
        V_hat = V_hat + w.beta * (grad_c1 * (np.log(f) + 1.0)[None, :]
                                  + grad_c2 * (np.log(1.0 - f) + 1.0)[None, :])
    col_mass = np.maximum(mu_tau.sum(axis=0), MASS_EPS)
    V_new = V_hat / col_mass[None, :]
    if not np.isfinite(V_new).all():
        raise ValueError("non-finite exemplar update")
    return V_new


def solve(X, scorer: Scorer, w: ObjectiveWeights, k: int, epsilon: float = 1e-3,
          maxiter: int = 100, seed: int = 0,
          init: tuple[np.ndarray, np.ndarray] | None = None,
          ) -> tuple[np.ndarray, np.ndarray, SolveReport]:
    """Run the fixed-point iteration to convergence (or maxiter).

    Initialization draws raw memberships uniformly from (0, 1] and takes k
    distinct data columns as the starting exemplars, then row-normalizes
    the membership.  ``init`` overrides this with an explicit (mu0, V0)
    pair, which is how restarts from a previous fixed point are expressed.
    Hitting maxiter is reported, not raised: the caller proceeds with the
    last iterates.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be d x n")
    d, n = X.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < k:
        raise ValueError(f"need at least k={k} samples, got {n}")
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")

    if init is None:
        rng = make_rng("display-solve", seed)
        mu_hat = 1.0 - rng.random((n, k))          # uniform in (0, 1]
        cols = rng.choice(n, size=k, replace=False)
        mu = mu_hat / mu_hat.sum(axis=1, keepdims=True)
        V = X[:, cols].copy()
    else:
        mu = np.array(init[0], dtype=np.float64)
        V = np.array(init[1], dtype=np.float64)
        check_membership(mu)

    trace = [objective(X, V, mu, scorer, w)]
    delta = float("inf")
    iterations = 0
    while iterations < maxiter:
        mu_new = update_membership(X, V, mu, w)
        V_new = update_exemplars(X, V, mu, scorer, w)
        delta = float(np.abs(mu_new - mu).sum() + np.abs(V_new - V).sum())
        mu, V = mu_new, V_new
        iterations += 1
        trace.append(objective(X, V, mu, scorer, w))
        if delta < epsilon:
            break
    report = SolveReport(iterations=iterations, final_delta=delta,
                         converged=delta < epsilon, objective_trace=trace)
    return mu, V, report


def select_display(V: np.ndarray, features: np.ndarray, pool_ids, forbidden=()) -> list[int]:
    """Map each exemplar column to its nearest eligible real sample.

    Greedy in column order: exemplar k takes the closest pool sample not
    forbidden and not already taken by an earlier exemplar; distance ties
    go to the smaller id.  Returns one distinct id per column.
    """
    V = np.asarray(V, dtype=np.float64)
    features = np.asarray(features, dtype=np.float64)
    k = V.shape[1]
    avail = sorted(set(int(i) for i in pool_ids) - set(int(i) for i in forbidden))
    if len(avail) < k:
        raise ValueError(f"pool has {len(avail)} eligible samples, need {k}")
    avail_arr = np.array(avail)
    dists = sq_dist(V, features[avail_arr].T)      # (K, |avail|)
    taken = np.zeros(len(avail), dtype=bool)
    chosen: list[int] = []
    for col in range(k):
        row = np.where(taken, np.inf, dists[col])
        best = int(np.argmin(row))                 # first minimum = smallest id
        taken[best] = True
        chosen.append(int(avail_arr[best]))
    return chosen
