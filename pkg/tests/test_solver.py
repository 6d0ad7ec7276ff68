import cvxpy as cp
import numpy as np
import pytest

from jsparse.geometry import partition_supports
from jsparse.solver import (GramFactor, RankDeficientError, SolverConfig, affine_project,
                            l21_norm, prior_objective, prox_row_shrink, prox_shifted_row_shrink,
                            solve_ml1, solve_ml1p)


def prox_oracle(v, theta, w=None):
    """Row-wise argmin of theta ||x - w|| + 0.5 ||x - v||^2 by a conic solver."""
    w = np.zeros_like(v) if w is None else w
    x = cp.Variable(v.shape)
    obj = theta * cp.sum(cp.norm(x - w, 2, axis=1)) + 0.5 * cp.sum_squares(x - v)
    cp.Problem(cp.Minimize(obj)).solve(solver=cp.CLARABEL, tol_gap_abs=1e-12,
                                       tol_gap_rel=1e-12, tol_feas=1e-12)
    return x.value


def ml1p_oracle(a, y, w, lam):
    x = cp.Variable(w.shape)
    obj = cp.sum(cp.norm(x, 2, axis=1)) + lam * cp.sum(cp.norm(x - w, 2, axis=1))
    prob = cp.Problem(cp.Minimize(obj), [a @ x == y])
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11)
    return prob.value


def instance(rng, n, m, l, k, kw=0):
    x0 = np.zeros((n, l))
    sup = rng.choice(n, k, replace=False)
    x0[sup] = rng.standard_normal((k, l))
    w = np.zeros_like(x0)
    w[sup[:kw]] = x0[sup[:kw]]
    a = rng.standard_normal((m, n))
    return a, a @ x0, w, x0


class TestProx:
    def test_zero_threshold_identity(self, rng):
        v = rng.standard_normal((6, 3))
        np.testing.assert_array_equal(prox_row_shrink(v, 0.0), v)

    def test_small_rows_vanish(self):
        v = np.array([[0.3, 0.4], [3.0, 4.0], [0.0, 0.0]])
        out = prox_row_shrink(v, 0.5)
        np.testing.assert_array_equal(out[0], [0.0, 0.0])
        np.testing.assert_allclose(out[1], [2.7, 3.6])
        np.testing.assert_array_equal(out[2], [0.0, 0.0])

    def test_matches_oracle(self, rng):
        v = rng.standard_normal((5, 3))
        np.testing.assert_allclose(prox_row_shrink(v, 0.7), prox_oracle(v, 0.7), atol=1e-8)

    def test_shifted_reduces(self, rng):
        v = rng.standard_normal((5, 3))
        w = rng.standard_normal((5, 3))
        np.testing.assert_array_equal(prox_shifted_row_shrink(v, np.zeros_like(v), 0.4),
                                      prox_row_shrink(v, 0.4))
        np.testing.assert_array_equal(prox_shifted_row_shrink(w, w, 0.4), w)
        np.testing.assert_allclose(prox_shifted_row_shrink(v, w, 0.9), prox_oracle(v, 0.9, w),
                                   atol=1e-8)

    def test_shifted_shape_mismatch(self):
        with pytest.raises(ValueError):
            prox_shifted_row_shrink(np.zeros((3, 2)), np.zeros((2, 3)), 1.0)

    def test_negative_theta(self):
        with pytest.raises(ValueError):
            prox_row_shrink(np.zeros((2, 2)), -1.0)


class TestAffineProject:
    def test_feasible_point_fixed(self, rng):
        a = rng.standard_normal((4, 9))
        x = rng.standard_normal((9, 2))
        np.testing.assert_allclose(affine_project(x, a, a @ x), x, atol=1e-12)

    def test_identity(self, rng):
        y = rng.standard_normal((5, 2))
        np.testing.assert_allclose(affine_project(rng.standard_normal((5, 2)), np.eye(5), y), y,
                                   atol=1e-14)

    def test_against_pseudoinverse(self, rng):
        a = rng.standard_normal((6, 15))
        y = rng.standard_normal((6, 3))
        x = rng.standard_normal((15, 3))
        factor = GramFactor(a)
        got = affine_project(x, a, y, factor)
        expected = x - np.linalg.pinv(a) @ (a @ x - y)
        np.testing.assert_allclose(got, expected, atol=1e-9)
        assert np.linalg.norm(a @ got - y) <= 1e-10 * np.linalg.norm(y)

    def test_rank_deficient(self, rng):
        a = rng.standard_normal((3, 8))
        a[2] = a[0] + a[1]
        with pytest.raises(RankDeficientError):
            GramFactor(a)
        with pytest.raises(RankDeficientError):
            affine_project(np.zeros((8, 1)), a, np.zeros((3, 1)))


class TestSolve:
    def test_square_system(self, rng):
        a = rng.standard_normal((12, 12))
        y = rng.standard_normal((12, 2))
        w = rng.standard_normal((12, 2))
        res = solve_ml1p(a, y, w, SolverConfig(lam=0.5))
        assert res.converged
        np.testing.assert_allclose(res.x_hat, np.linalg.solve(a, y), atol=1e-8)

    def test_exact_prior_large_weight(self, rng):
        a, y, _, x0 = instance(rng, 40, 15, 3, 6)
        res = solve_ml1p(a, y, x0, SolverConfig(lam=10.0))
        assert res.converged
        assert res.objective <= prior_objective(x0, x0, 10.0) + 1e-6
        assert np.linalg.norm(a @ res.x_hat - y) <= 1e-8

    def test_matches_conic_oracle(self, rng):
        a, y, _, x0 = instance(rng, 12, 8, 2, 3)
        w = rng.standard_normal((12, 2))
        res = solve_ml1p(a, y, w, SolverConfig(lam=0.5))
        assert res.converged
        assert res.objective == pytest.approx(ml1p_oracle(a, y, w, 0.5), rel=1e-5)

    def test_ml1_square(self, rng):
        a = rng.standard_normal((10, 10))
        y = rng.standard_normal((10, 3))
        res = solve_ml1(a, y)
        np.testing.assert_allclose(res.x_hat, np.linalg.solve(a, y), atol=1e-8)

    def test_ml1_feasible_bound(self, rng):
        a, y, _, x0 = instance(rng, 40, 15, 3, 6)
        res = solve_ml1(a, y)
        assert res.objective <= l21_norm(x0) + 1e-6
        assert np.linalg.norm(a @ res.x_hat - y) <= 1e-8

    def test_ml1_matches_conic_oracle(self, rng):
        a, y, _, _ = instance(rng, 12, 8, 2, 3)
        res = solve_ml1(a, y)
        assert res.objective == pytest.approx(ml1p_oracle(a, y, np.zeros((12, 2)), 0.0), rel=1e-5)

    def test_feasibility_invariant(self, rng):
        a, y, w, _ = instance(rng, 60, 25, 2, 8, kw=3)
        cfg = SolverConfig(lam=0.5)
        res = solve_ml1p(a, y, w, cfg)
        assert res.converged
        assert res.primal_residual <= cfg.primal_tol and res.dual_residual <= cfg.dual_tol
        assert np.linalg.norm(a @ res.x_hat - y) <= cfg.primal_tol * max(1.0, np.linalg.norm(y))

    def test_recovers_above_transition(self, rng):
        a, y, w, x0 = instance(rng, 100, 50, 2, 16, kw=4)
        res = solve_ml1p(a, y, w)
        assert np.linalg.norm(res.x_hat - x0) <= 1e-5

    def test_deterministic(self, rng):
        a, y, w, _ = instance(rng, 30, 12, 2, 5, kw=2)
        r1 = solve_ml1p(a, y, w, record_history=True)
        r2 = solve_ml1p(a, y, w, record_history=True)
        assert r1.iterations == r2.iterations
        np.testing.assert_array_equal(r1.x_hat, r2.x_hat)
        assert r1.history == r2.history

    def test_objective_window_trend(self, rng):
        a, y, w, _ = instance(rng, 60, 25, 2, 8, kw=3)
        res = solve_ml1p(a, y, w, SolverConfig(lam=0.5, max_iters=3000), record_history=True)
        hist = np.asarray(res.history)
        windows = hist[: hist.size // 25 * 25].reshape(-1, 25).mean(axis=1)
        assert np.all(np.diff(windows) <= 1e-9)

    def test_optimality_certificate(self, rng):
        a, y, _, x0 = instance(rng, 20, 12, 2, 4)
        w = x0.copy()
        w[np.flatnonzero(np.linalg.norm(x0, axis=1))[0]] *= -0.5
        w[0] += 0.3
        lam = 0.5
        res = solve_ml1p(a, y, w, SolverConfig(lam=lam))
        assert res.converged
        x = res.x_hat
        part = partition_supports(x, w, row_zero_tol=1e-7)
        g = res.subgradient
        for i in part.e1:
            d = x[i] - w[i]
            expected = x[i] / np.linalg.norm(x[i]) + lam * d / np.linalg.norm(d)
            np.testing.assert_allclose(g[i], expected, atol=1e-5)
        for i in part.e2:
            rest = g[i] - x[i] / np.linalg.norm(x[i])
            assert np.linalg.norm(rest) <= lam + 1e-5
        for i in part.e3:
            d = x[i] - w[i]
            assert np.linalg.norm(g[i] - lam * d / np.linalg.norm(d)) <= 1 + 1e-5
        for i in part.e4:
            assert np.linalg.norm(g[i]) <= 1 + lam + 1e-5
        mult, *_ = np.linalg.lstsq(a.T, g, rcond=None)
        assert np.linalg.norm(g - a.T @ mult) <= 1e-4

    def test_nonconvergence_reported(self, rng):
        a, y, w, _ = instance(rng, 60, 25, 2, 8, kw=3)
        res = solve_ml1p(a, y, w, SolverConfig(max_iters=3))
        assert not res.converged and res.iterations == 3
        assert np.isfinite(res.objective)

    def test_dimension_checks(self, rng):
        a = rng.standard_normal((4, 8))
        with pytest.raises(ValueError):
            solve_ml1p(a, np.zeros((5, 2)), np.zeros((8, 2)))
        with pytest.raises(ValueError):
            solve_ml1p(a, np.zeros((4, 2)), np.zeros((8, 3)))

    @pytest.mark.parametrize("kwargs", [dict(penalty=0.0), dict(primal_tol=0.0),
                                        dict(max_iters=0), dict(lam=-1.0)])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            SolverConfig(**kwargs)
