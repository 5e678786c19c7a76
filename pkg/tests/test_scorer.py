import numpy as np
import pytest

from oracles import bisector_separator, fd_score_gradient
from vexad.rng import make_rng
from vexad.scorer import (P_EPS, Scorer, TrainConfig, gradient_descent, score,
                          score_batch, score_gradient, train)


def _blobs(seed=0, n_per=10, gap=4.0):
    rng = make_rng("test-blobs", seed)
    a = rng.normal(size=(n_per, 2)) * 0.5
    b = rng.normal(size=(n_per, 2)) * 0.5 + gap
    X = np.vstack([a, b])
    y = np.array([-1] * n_per + [1] * n_per)
    return X, y


class TestTrain:
    def test_symmetric_pair_midpoint(self):
        """Mirror-image 1-D pair: bias stays exactly 0, score(0) = 0.5."""
        s = train(np.array([[-1.0], [1.0]]), np.array([-1, 1]))
        assert s.bias == 0.0
        assert score(s, np.array([0.0])) == 0.5

    def test_separable_blobs_perfect_accuracy(self):
        """Blobs verified separable by bisector search train to accuracy 1."""
        X, y = _blobs()
        assert bisector_separator(X, y) is not None
        s = train(X, y)
        pred = np.where(score_batch(s, X) >= 0.5, 1, -1)
        assert np.array_equal(pred, y)

    def test_all_negative_degenerate(self):
        X = np.arange(8.0).reshape(4, 2)
        s = train(X, np.array([-1, -1, -1, -1]))
        assert s.degenerate
        f = score_batch(s, X)
        assert np.all(f == f[0]) and f[0] <= 0.5

    def test_all_positive_degenerate(self):
        s = train(np.zeros((3, 2)), np.array([1, 1, 1]))
        assert s.degenerate
        assert score(s, np.zeros(2)) == pytest.approx(0.95)

    def test_loss_non_increasing(self):
        X, y = _blobs(seed=3)
        sample_w = np.ones(len(y))
        _, _, losses = gradient_descent(X, y.astype(float), sample_w, 1e-2, 200, 1e-8)
        diffs = np.diff(losses)
        assert np.all(diffs <= 1e-12)

    def test_determinism_bit_identical(self):
        X, y = _blobs(seed=5)
        cfg = TrainConfig()
        a, b = train(X, y, cfg), train(X, y, cfg)
        assert a.weights.tobytes() == b.weights.tobytes() and a.bias == b.bias

    def test_class_balanced_shifts_boundary(self):
        """9:1 imbalance: the balanced fit scores the minority point higher."""
        X = np.vstack([np.linspace(0, 1, 9)[:, None], [[3.0]]])
        y = np.array([-1] * 9 + [1])
        bal = train(X, y, TrainConfig(class_balanced=True))
        unbal = train(X, y, TrainConfig(class_balanced=False))
        probe = np.array([2.0])
        assert score(bal, probe) > score(unbal, probe)

    def test_rejects_bad_labels(self):
        with pytest.raises(ValueError, match="-1 or \\+1"):
            train(np.zeros((2, 1)), np.array([0, 1]))
        with pytest.raises(ValueError):
            train(np.zeros((0, 1)), np.array([]))


class TestScore:
    def test_zero_scorer_is_half(self):
        s = Scorer(weights=np.zeros(3), bias=0.0, trained_on=0)
        for _ in range(3):
            assert score(s, np.ones(3)) == 0.5

    def test_clamp_keeps_log_finite(self):
        s = Scorer(weights=np.array([1e6]), bias=0.0, trained_on=0)
        p = score(s, np.array([1.0]))
        assert p == 1.0 - P_EPS
        assert np.isfinite(np.log(p)) and np.isfinite(np.log(1.0 - p))

    def test_monotone_along_weights(self):
        s = Scorer(weights=np.array([2.0, -1.0]), bias=0.3, trained_on=0)
        w = s.weights / np.linalg.norm(s.weights)
        vals = [score(s, t * w) for t in np.linspace(-3, 3, 25)]
        assert np.all(np.diff(vals) > 0)

    def test_complement_sums_to_one(self):
        """f1 + f2 = 1 exactly; f2 is literally 1 - f1."""
        s = Scorer(weights=np.array([0.7, -0.2]), bias=0.1, trained_on=0)
        rng = make_rng("complement", 0)
        for x in rng.normal(size=(20, 2)):
            f1 = score(s, x)
            assert f1 + (1.0 - f1) == 1.0

    def test_dimension_mismatch(self):
        s = Scorer(weights=np.zeros(3), bias=0.0, trained_on=0)
        with pytest.raises(ValueError):
            score(s, np.zeros(4))


class TestScoreGradient:
    def test_zero_weights_zero_gradient(self):
        s = Scorer(weights=np.zeros(4), bias=0.2, trained_on=0)
        g1, g2 = score_gradient(s, np.ones((4, 3)))
        assert not g1.any() and not g2.any()

    def test_norm_at_boundary_column(self):
        """Where f = 0.5 the gradient norm is |w|/4."""
        w = np.array([3.0, 4.0])
        s = Scorer(weights=w, bias=-2.0, trained_on=0)
        v = 2.0 * w / (w @ w)          # solves w.v + b = 0
        g1, _ = score_gradient(s, v[:, None])
        assert np.linalg.norm(g1[:, 0]) == pytest.approx(0.25 * 5.0, abs=1e-12)

    def test_matches_finite_differences(self):
        rng = make_rng("fd-grad", 1)
        s = Scorer(weights=rng.normal(size=5), bias=float(rng.normal()), trained_on=0)
        V = rng.normal(size=(5, 7))
        g1, g2 = score_gradient(s, V)
        for k in range(7):
            fd = fd_score_gradient(lambda x: score(s, x), V[:, k].copy())
            denom = np.maximum(np.abs(fd), 1e-8)
            assert np.max(np.abs(g1[:, k] - fd) / denom) < 1e-4
        assert np.array_equal(g2, -g1)
