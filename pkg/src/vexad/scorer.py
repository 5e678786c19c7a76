"""Probabilistic linear scorer with exact input gradients.

The decision function is a logistic regression trained by deterministic
full-batch gradient descent with backtracking line search.  It exposes two
class scores f1(x) = sigmoid(w.x + b) and f2(x) = 1 - f1(x), plus their
closed-form gradients with respect to the input, which the display
optimizer consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

P_EPS = 1e-12           # probability clamp, keeps log f finite downstream
ARMIJO_C = 1e-4
MIN_STEP = 1e-20
DEGENERATE_CLAMP = (0.05, 0.95)


@dataclass(frozen=True)
class TrainConfig:
    l2_strength: float = 1e-2
    max_epochs: int = 500
    grad_tol: float = 1e-6
    class_balanced: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.l2_strength < 0:
            raise ValueError("l2_strength must be >= 0")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be > 0")


@dataclass(frozen=True)
class Scorer:
    weights: np.ndarray
    bias: float
    trained_on: int
    degenerate: bool = False

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def to_json(self) -> dict:
        return {
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "degenerate": bool(self.degenerate),
            "trained_on": int(self.trained_on),
        }

    @staticmethod
    def from_json(obj: dict) -> "Scorer":
        return Scorer(
            weights=np.asarray(obj["weights"], dtype=np.float64),
            bias=float(obj["bias"]),
            trained_on=int(obj.get("trained_on", 0)),
            degenerate=bool(obj["degenerate"]),
        )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softplus(z: np.ndarray) -> np.ndarray:
    # log(1 + e^z), stable for large |z|
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _loss_and_grad(X, y, sample_w, w, b, l2):
    z = X @ w + b
    margins = -y * z
    loss = float(np.mean(sample_w * _softplus(margins)) + 0.5 * l2 * np.dot(w, w))
    s = sample_w * (-y) * _sigmoid(margins)
    gw = (X.T @ s) / len(y) + l2 * w
    gb = float(np.mean(s))
    return loss, gw, gb


def gradient_descent(X, y, sample_w, l2, max_epochs, grad_tol):
    """Full-batch descent with Armijo backtracking; returns (w, b, losses)."""
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    loss, gw, gb = _loss_and_grad(X, y, sample_w, w, b, l2)
    losses = [loss]
    for _ in range(max_epochs):
        gmax = max(float(np.max(np.abs(gw))) if d else 0.0, abs(gb))
        if gmax < grad_tol:
            break
        gnorm2 = float(np.dot(gw, gw)) + gb * gb
        step = 1.0
        accepted = False
        while step > MIN_STEP:
            w_new = w - step * gw
            b_new = b - step * gb
            loss_new, gw_new, gb_new = _loss_and_grad(X, y, sample_w, w_new, b_new, l2)
            if loss_new <= loss - ARMIJO_C * step * gnorm2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        w, b, loss, gw, gb = w_new, b_new, loss_new, gw_new, gb_new
        losses.append(loss)
    return w, b, losses


def train(X, y, cfg: TrainConfig = TrainConfig()) -> Scorer:
    """Fit the scorer on labels in {-1, +1}.

    Single-class input does not raise: it yields a degenerate constant
    scorer at the (clamped) positive-class fraction, so an all-negative
    first annotation round keeps the loop alive.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise ValueError("X must be (n, d) with one label per row")
    if not np.isfinite(X).all():
        raise ValueError("features must be finite")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")

    n, d = X.shape
    if len(np.unique(y)) < 2:
        p = float(np.clip(np.mean(y == 1.0), *DEGENERATE_CLAMP))
        bias = float(np.log(p / (1.0 - p)))
        return Scorer(weights=np.zeros(d), bias=bias, trained_on=n, degenerate=True)

    if cfg.class_balanced:
        n_pos = int(np.sum(y == 1.0))
        n_neg = n - n_pos
        sample_w = np.where(y == 1.0, n / (2.0 * n_pos), n / (2.0 * n_neg))
    else:
        sample_w = np.ones(n)
    w, b, _ = gradient_descent(X, y, sample_w, cfg.l2_strength, cfg.max_epochs, cfg.grad_tol)
    return Scorer(weights=w, bias=b, trained_on=n, degenerate=False)


def score(s: Scorer, x) -> float:
    """f1(x) = sigmoid(w.x + b), clamped into [P_EPS, 1 - P_EPS]."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (s.dim,):
        raise ValueError(f"expected feature vector of length {s.dim}, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("features must be finite")
    z = np.array([float(s.weights @ x) + s.bias])
    return float(np.clip(_sigmoid(z)[0], P_EPS, 1.0 - P_EPS))


def score_batch(s: Scorer, X) -> np.ndarray:
    """Vectorized :func:`score` over rows of an (n, d) matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != s.dim:
        raise ValueError(f"expected (n, {s.dim}) matrix, got shape {X.shape}")
    return np.clip(_sigmoid(X @ s.weights + s.bias), P_EPS, 1.0 - P_EPS)


def score_gradient(s: Scorer, V) -> tuple[np.ndarray, np.ndarray]:
    """Input gradients of both class scores at each column of V (d x K).

    Column k of the first result is f(1-f) * weights evaluated at V[:, k];
    the second class score is 1 - f, so its gradient is the exact negation.
    """
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2 or V.shape[0] != s.dim:
        raise ValueError(f"expected (d={s.dim}, K) exemplar matrix, got shape {V.shape}")
    if not np.isfinite(V).all():
        raise ValueError("exemplars must be finite")
    f = score_batch(s, V.T)
    grad_c1 = s.weights[:, None] * (f * (1.0 - f))[None, :]
    return grad_c1, -grad_c1
