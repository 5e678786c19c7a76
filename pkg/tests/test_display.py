import math

import numpy as np
import pytest

from oracles import nearest_pick_loop, objective_loop, soft_kmeans_step, sq_dist_loop
from vexad.display import (ObjectiveWeights, check_membership, objective,
                           select_display, solve, sq_dist, update_exemplars,
                           update_membership)
from vexad.rng import make_rng
from vexad.scorer import Scorer

ZERO_SCORER = Scorer(weights=np.zeros(2), bias=0.0, trained_on=0)


def _rand_instance(seed, n=12, k=3, d=2, scale=1.0):
    rng = make_rng("display-test", seed)
    X = rng.normal(size=(d, n)) * scale
    mu = 1.0 - rng.random((n, k))
    mu /= mu.sum(axis=1, keepdims=True)
    V = X[:, rng.choice(n, size=k, replace=False)].copy()
    return X, mu, V


class TestSqDist:
    def test_exemplar_on_sample_is_zero(self):
        X = np.array([[1.0, 2.0], [3.0, 4.0]])
        V = X[:, :1].copy()
        assert sq_dist(V, X)[0, 0] == 0.0

    def test_3_4_5_triangle(self):
        V = np.array([[1.0], [1.0]])
        X = np.array([[4.0], [5.0]])
        assert sq_dist(V, X)[0, 0] == 25.0

    def test_matches_loop_oracle(self):
        rng = make_rng("sq-dist", 0)
        V = rng.normal(size=(3, 2))
        X = rng.normal(size=(3, 4))
        assert np.max(np.abs(sq_dist(V, X) - sq_dist_loop(V, X))) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            sq_dist(np.zeros((3, 2)), np.zeros((2, 4)))


class TestObjective:
    def test_uniform_membership_entropy_term(self):
        """Uniform rows: the regularizer contributes exactly -n log K."""
        X = np.zeros((2, 4))
        V = np.zeros((2, 2))
        mu = np.full((4, 2), 0.5)
        w = ObjectiveWeights(rep_on=0, alpha=0.0, beta=0.0, gamma=1.0)
        val = objective(X, V, mu, ZERO_SCORER, w)
        assert val == pytest.approx(-4.0 * math.log(2.0), abs=1e-12)

    def test_evenly_scored_exemplar_ambiguity(self):
        """A 0.5-scored exemplar contributes 2 * 0.5 * log 0.5 = -log 2."""
        X = np.zeros((2, 1))
        V = np.ones((2, 1))
        mu = np.ones((1, 1))            # hard row: entropy term is exactly 0
        w = ObjectiveWeights(rep_on=0, alpha=0.0, beta=1.0, gamma=1.0)
        val = objective(X, V, mu, ZERO_SCORER, w)
        assert val == pytest.approx(-math.log(2.0), abs=1e-12)

    def test_matches_scalar_loop_oracle(self):
        rng = make_rng("obj-oracle", 3)
        X, mu, V = _rand_instance(3, n=5, k=2, d=2)
        scorer = Scorer(weights=rng.normal(size=2), bias=0.3, trained_on=0)
        w = ObjectiveWeights(rep_on=1, alpha=0.7, beta=1.3, gamma=0.4)
        got = objective(X, V, mu, scorer, w)
        want = objective_loop(X, V, mu, scorer.weights, scorer.bias, 1, 0.7, 1.3, 0.4)
        assert got == pytest.approx(want, abs=1e-10)

    def test_rejects_non_finite(self):
        X = np.zeros((2, 2))
        V = np.array([[np.inf, 0.0], [0.0, 0.0]])
        mu = np.full((2, 2), 0.5)
        with pytest.raises(ValueError):
            objective(X, V, mu, ZERO_SCORER, ObjectiveWeights())


class TestUpdateMembership:
    def test_two_point_logistic_row(self):
        """Distances [0, 1] with gamma=1: row is [1, e^-1] normalized."""
        X = np.array([[0.0, 5.0], [0.0, 5.0]])
        V = np.array([[0.0, 1.0], [0.0, 0.0]])
        w = ObjectiveWeights(rep_on=1, alpha=0.0, beta=0.0, gamma=1.0)
        mu = update_membership(X, V, np.full((2, 2), 0.5), w)
        expected = 1.0 / (1.0 + math.exp(-1.0))
        assert mu[0, 0] == pytest.approx(expected, abs=1e-12)
        assert mu[0, 1] == pytest.approx(1.0 - expected, abs=1e-12)

    def test_equidistant_gives_uniform_row(self):
        X = np.zeros((2, 3))
        V = np.array([[1.0, -1.0, 0.0], [0.0, 0.0, 1.0]])  # all at distance 1
        w = ObjectiveWeights(alpha=0.0)
        mu = update_membership(X, V, np.full((3, 3), 1 / 3), w)
        assert np.max(np.abs(mu - 1 / 3)) < 1e-15

    def test_simplex_contract_random_sweep(self):
        for seed in range(25):
            X, mu, V = _rand_instance(seed, n=30, k=4, d=3, scale=3.0)
            w = ObjectiveWeights(alpha=float(seed % 3), gamma=0.5 + seed % 2)
            out = update_membership(X, V, mu, w)
            check_membership(out)
            assert np.all(out >= 0)

    def test_stabilized_equals_naive_exponentiation(self):
        """Where naive exp does not underflow, both paths agree to 1e-12."""
        X, mu, V = _rand_instance(7, n=10, k=3, d=2)
        w = ObjectiveWeights(alpha=0.5, gamma=1.0)
        D = sq_dist(V, X).T
        mass = np.maximum(mu.sum(axis=0), 1e-12)
        naive = np.exp(-(D + 0.5 * (1.0 + np.log(mass))[None, :]) / 1.0)
        naive /= naive.sum(axis=1, keepdims=True)
        assert np.max(np.abs(update_membership(X, V, mu, w) - naive)) < 1e-12

    def test_uses_transpose_of_sq_dist(self):
        """The n x K distance block equals sq_dist(V, X)' bit for bit."""
        X, mu, V = _rand_instance(9, n=8, k=2, d=3)
        w = ObjectiveWeights(alpha=0.0, gamma=1.0)
        D = sq_dist(V, X).T
        logits = -D.copy()
        logits -= logits.max(axis=1, keepdims=True)
        ref = np.exp(logits)
        ref /= ref.sum(axis=1, keepdims=True)
        assert np.array_equal(update_membership(X, V, mu, w), ref)


class TestUpdateExemplars:
    def test_hard_assignment_means(self):
        X = np.array([[0.0, 2.0, 10.0], [0.0, 4.0, -6.0]])
        mu = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        w = ObjectiveWeights(beta=0.0)
        V = update_exemplars(X, np.zeros((2, 2)), mu, ZERO_SCORER, w)
        assert np.allclose(V[:, 0], [1.0, 2.0], atol=1e-12)
        assert np.allclose(V[:, 1], [10.0, -6.0], atol=1e-12)

    def test_uniform_membership_gives_global_mean(self):
        X, mu, V0 = _rand_instance(4, n=9, k=3, d=2)
        mu = np.full_like(mu, 1 / 3)
        V = update_exemplars(X, V0, mu, ZERO_SCORER, ObjectiveWeights(beta=0.0))
        mean = X.mean(axis=1)
        for k in range(3):
            assert np.allclose(V[:, k], mean, atol=1e-12)

    def test_ambiguity_force_combined_form(self):
        """The two class terms collapse to f(1-f) log(f/(1-f)) w per column."""
        rng = make_rng("amb-force", 0)
        scorer = Scorer(weights=rng.normal(size=3), bias=0.2, trained_on=0)
        X = rng.normal(size=(3, 6))
        mu = 1.0 - rng.random((6, 2))
        mu /= mu.sum(axis=1, keepdims=True)
        V_tau = rng.normal(size=(3, 2))
        w = ObjectiveWeights(beta=1.7)
        got = update_exemplars(X, V_tau, mu, scorer, w)
        z = V_tau.T @ scorer.weights + scorer.bias
        f = 1.0 / (1.0 + np.exp(-z))
        force = scorer.weights[:, None] * (f * (1 - f) * np.log(f / (1 - f)))[None, :]
        mass = mu.sum(axis=0)
        want = (X @ mu + 1.7 * force) / mass[None, :]
        assert np.max(np.abs(got - want)) < 1e-12

    def test_boundary_column_feels_no_force(self):
        """Columns scored exactly 0.5 match the beta=0 update exactly."""
        w_vec = np.array([1.0, -2.0])
        scorer = Scorer(weights=w_vec, bias=0.5, trained_on=0)
        v_bnd = -0.5 * w_vec / (w_vec @ w_vec)      # w.v + b = 0
        X, mu, _ = _rand_instance(5, n=7, k=2, d=2)
        V_tau = np.column_stack([v_bnd, v_bnd])
        on = update_exemplars(X, V_tau, mu, scorer, ObjectiveWeights(beta=2.0))
        off = update_exemplars(X, V_tau, mu, scorer, ObjectiveWeights(beta=0.0))
        assert np.array_equal(on, off)


class TestSolve:
    def test_soft_kmeans_reduction_small(self):
        """alpha=beta=0 reproduces the loop-oracle trajectory per iteration."""
        for seed, gamma in [(0, 1.0), (1, 0.1), (2, 10.0)]:
            X, mu, V = _rand_instance(seed, n=20, k=3, d=2)
            w = ObjectiveWeights(alpha=0.0, beta=0.0, gamma=gamma)
            mu_o, V_o = mu.copy(), V.copy()
            mu_s, V_s = mu.copy(), V.copy()
            for _ in range(15):
                mu_o, V_o = soft_kmeans_step(X, mu_o, V_o, gamma)
                mu_s, V_s, _ = solve(X, ZERO_SCORER, w, 3, epsilon=1e-12,
                                     maxiter=1, init=(mu_s, V_s))
                assert np.max(np.abs(mu_s - mu_o)) < 1e-10
                assert np.max(np.abs(V_s - V_o)) < 1e-10

    def test_single_exemplar(self):
        """K=1: membership is forced to ones; the exemplar is the data mean."""
        X, _, _ = _rand_instance(3, n=15, k=1, d=2)
        w = ObjectiveWeights(beta=0.0)
        mu, V, report = solve(X, ZERO_SCORER, w, 1, seed=0)
        assert np.array_equal(mu, np.ones((15, 1)))
        assert np.allclose(V[:, 0], X.mean(axis=1), atol=1e-12)
        assert report.converged

    def test_fixed_point_idempotence(self):
        """Restarting from a converged pair stops after one iteration."""
        X, _, _ = _rand_instance(8, n=40, k=2, d=2)
        w = ObjectiveWeights(alpha=0.5, beta=0.0, gamma=5.0)
        mu, V, report = solve(X, ZERO_SCORER, w, 2, epsilon=1e-6, seed=1)
        assert report.converged
        mu2, V2, report2 = solve(X, ZERO_SCORER, w, 2, epsilon=1e-6, init=(mu, V))
        assert report2.iterations == 1
        assert report2.converged and report2.final_delta < 1e-6

    def test_determinism(self):
        X, _, _ = _rand_instance(2, n=25, k=3, d=2)
        w = ObjectiveWeights()
        a = solve(X, ZERO_SCORER, w, 3, seed=5)
        b = solve(X, ZERO_SCORER, w, 3, seed=5)
        assert a[0].tobytes() == b[0].tobytes()
        assert a[1].tobytes() == b[1].tobytes()
        assert a[2].iterations == b[2].iterations

    def test_maxiter_reported_not_fatal(self):
        X, _, _ = _rand_instance(6, n=30, k=3, d=2, scale=40.0)
        w = ObjectiveWeights(gamma=0.01)
        mu, V, report = solve(X, ZERO_SCORER, w, 3, epsilon=1e-15, maxiter=4, seed=0)
        assert report.iterations == 4 and not report.converged
        check_membership(mu)
        assert np.isfinite(V).all()

    def test_report_invariants(self):
        X, _, _ = _rand_instance(1, n=20, k=2, d=2)
        _, _, report = solve(X, ZERO_SCORER, ObjectiveWeights(), 2, maxiter=50, seed=3)
        assert report.iterations <= 50
        assert report.converged == (report.final_delta < 1e-3)
        assert len(report.objective_trace) == report.iterations + 1
        assert all(np.isfinite(v) for v in report.objective_trace)


class TestSelectDisplay:
    def test_exact_match_wins(self):
        feats = np.array([[0.0, 0.0], [5.0, 5.0], [9.0, 9.0]])
        V = feats[1][:, None].copy()
        assert select_display(V, feats, [0, 1, 2]) == [1]

    def test_shared_nearest_goes_to_first_column(self):
        """Both exemplars closest to sample 2: column 0 takes it, column 1
        falls back to its own second-nearest; a loop oracle agrees."""
        feats = np.array([[0.0], [1.0], [2.0], [3.5], [10.0]])
        V = np.array([[1.9, 2.4]])
        picks = select_display(V, feats, range(5))
        assert picks == [2, 3]
        assert picks == nearest_pick_loop(V, feats, range(5), ())

    def test_matches_loop_oracle_random(self):
        rng = make_rng("select-display", 0)
        for trial in range(50):
            feats = rng.normal(size=(8, 2))
            V = rng.normal(size=(2, 3))
            forbidden = {int(i) for i in rng.choice(8, size=2, replace=False)}
            got = select_display(V, feats, range(8), forbidden)
            assert got == nearest_pick_loop(V, feats, range(8), forbidden)
            assert len(set(got)) == 3 and not set(got) & forbidden

    def test_insufficient_pool(self):
        with pytest.raises(ValueError):
            select_display(np.zeros((2, 3)), np.zeros((4, 2)), [0, 1], {0})
