import numpy as np
import pytest

from radiosel.errors import DataError
from radiosel.solver import (LinearModel, SolverConfig, WeightedBinaryProblem,
                             objective, smooth_gradient, smooth_loss,
                             soft_threshold, solve, weighted_01_loss)


def random_problem(rng, n=30, dim=4, lam=0.0):
    X = rng.normal(0, 2, size=(n, dim))
    y = rng.choice([-1.0, 1.0], size=n)
    omega = rng.uniform(0.1, 50.0, size=n)
    return WeightedBinaryProblem(X, y, omega, lam)


class TestSoftThreshold:
    def test_closed_form(self, rng):
        v = rng.normal(0, 3, size=200)
        t = 0.7
        expected = np.sign(v) * np.maximum(np.abs(v) - t, 0.0)
        assert np.array_equal(soft_threshold(v, t), expected)

    def test_zeroing(self):
        assert np.array_equal(soft_threshold(np.array([0.5, -0.5]), 1.0), [0.0, 0.0])


class TestGradient:
    def test_matches_central_differences(self, rng):
        h = 1e-6
        for _ in range(100):
            problem = random_problem(rng, n=int(rng.integers(5, 40)))
            model = LinearModel(rng.normal(0, 1, 4), float(rng.normal(0, 1)))
            gw, gw0 = smooth_gradient(problem, model)
            for j in range(4):
                e = np.zeros(4)
                e[j] = h
                fd = (smooth_loss(problem, LinearModel(model.w + e, model.w0))
                      - smooth_loss(problem, LinearModel(model.w - e, model.w0))) / (2 * h)
                assert gw[j] == pytest.approx(fd, rel=1e-5, abs=1e-7)
            fd0 = (smooth_loss(problem, LinearModel(model.w, model.w0 + h))
                   - smooth_loss(problem, LinearModel(model.w, model.w0 - h))) / (2 * h)
            assert gw0 == pytest.approx(fd0, rel=1e-5, abs=1e-7)

    def test_stable_for_huge_margins(self):
        problem = WeightedBinaryProblem(np.array([[1000.0], [-1000.0]]),
                                        np.array([1.0, -1.0]), np.array([1.0, 1.0]))
        model = LinearModel(np.array([5.0]), 0.0)
        gw, gw0 = smooth_gradient(problem, model)
        assert np.all(np.isfinite(gw)) and np.isfinite(gw0)
        assert smooth_loss(problem, model) >= 0.0


class TestSolve:
    def test_large_lambda_closed_form(self, rng):
        for _ in range(10):
            problem = random_problem(rng, n=40)
            lam = 1e6 * float(np.sum(problem.omega))
            problem = WeightedBinaryProblem(problem.X, problem.y, problem.omega, lam)
            cfg = SolverConfig(max_iter=5000, tol=1e-15)
            model = solve(problem, LinearModel(rng.normal(0, 1, 4), 0.0), cfg)
            assert np.array_equal(model.w, np.zeros(4))
            wp = float(np.sum(problem.omega[problem.y > 0]))
            wn = float(np.sum(problem.omega[problem.y < 0]))
            assert model.w0 == pytest.approx(np.log(wp / wn), abs=1e-6)

    def test_separable_two_points(self):
        problem = WeightedBinaryProblem(np.array([[-1.0], [1.0]]),
                                        np.array([-1.0, 1.0]), np.array([1.0, 1.0]))
        model = solve(problem, LinearModel(np.zeros(1), 0.0))
        assert model.w[0] > 0
        assert weighted_01_loss(model, problem) == 0.0

    def test_objective_never_above_init(self, rng):
        for _ in range(20):
            problem = random_problem(rng, lam=float(rng.uniform(0, 5)))
            init = LinearModel(rng.normal(0, 2, 4), float(rng.normal(0, 2)))
            out = solve(problem, init, SolverConfig(max_iter=50, tol=1e-10))
            assert objective(problem, out) <= objective(problem, init)

    def test_monotone_objective_sequence(self, rng):
        # re-solving from each iterate must keep decreasing: emulate by
        # chaining short runs, each warm-started at the previous solution
        problem = random_problem(rng, n=50, lam=0.5)
        model = LinearModel(rng.normal(0, 1, 4), 0.0)
        values = [objective(problem, model)]
        for _ in range(30):
            model = solve(problem, model, SolverConfig(max_iter=1, tol=1e-16))
            values.append(objective(problem, model))
        assert all(b <= a for a, b in zip(values, values[1:]))

    def test_lambda_grid_shrinks_weights(self, rng):
        problem_base = random_problem(rng, n=60)
        norms = []
        for lam in (0.0, 0.1, 1.0, 10.0, 100.0, 1000.0):
            problem = WeightedBinaryProblem(problem_base.X, problem_base.y,
                                            problem_base.omega, lam)
            model = solve(problem, LinearModel(np.zeros(4), 0.0),
                          SolverConfig(max_iter=3000, tol=1e-14))
            norms.append(float(np.sum(np.abs(model.w))))
        assert all(b <= a + 1e-8 for a, b in zip(norms, norms[1:]))

    def test_deterministic(self, rng):
        problem = random_problem(rng, lam=0.3)
        init = LinearModel(rng.normal(0, 1, 4), 0.5)
        a = solve(problem, init)
        b = solve(problem, init)
        assert np.array_equal(a.w, b.w) and a.w0 == b.w0

    def test_init_shape_checked(self, rng):
        problem = random_problem(rng)
        with pytest.raises(DataError):
            solve(problem, LinearModel(np.zeros(3), 0.0))


class TestWeighted01Loss:
    def test_perfect_separator_zero(self):
        problem = WeightedBinaryProblem(np.array([[-2.0], [2.0]]),
                                        np.array([-1.0, 1.0]), np.array([3.0, 4.0]))
        assert weighted_01_loss(LinearModel(np.array([1.0]), 0.0), problem) == 0.0

    def test_zero_model_tie_counts_negatives(self):
        # 3 positive, 5 negative, unit weights: score 0 -> +1, so the
        # negative mass is the loss
        X = np.zeros((8, 2))
        y = np.array([1.0] * 3 + [-1.0] * 5)
        problem = WeightedBinaryProblem(X, y, np.ones(8))
        assert weighted_01_loss(LinearModel(np.zeros(2), 0.0), problem) == 5.0

    def test_matches_per_point_check(self, rng):
        for _ in range(50):
            problem = random_problem(rng, n=25)
            model = LinearModel(rng.normal(0, 1, 4), float(rng.normal(0, 1)))
            total = 0.0
            for i in range(25):
                s = float(problem.X[i] @ model.w + model.w0)
                pred = 1.0 if s >= 0 else -1.0
                if pred != problem.y[i]:
                    total += problem.omega[i]
            assert weighted_01_loss(model, problem) == pytest.approx(total, rel=1e-12)

    def test_problem_validation(self):
        with pytest.raises(DataError):
            WeightedBinaryProblem(np.zeros((2, 2)), np.array([1.0, 2.0]), np.ones(2))
        with pytest.raises(DataError):
            WeightedBinaryProblem(np.zeros((2, 2)), np.array([1.0, -1.0]),
                                  np.array([1.0, 0.0]))
