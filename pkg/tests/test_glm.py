# tests/test_glm.py
import math

import numpy as np
import pytest

from ruleglm.glm import (DesignMatrix, fit_weighted_l1, gradient_smooth,
                         intercept_design, kkt_residual, log_partition,
                         objective, predict_mean, residuals)

from oracles import central_difference_gradient, scalar_logistic_objective


def make_design(family, X, penalties):
    n = X.shape[0]
    return DesignMatrix(family, np.hstack([np.ones((n, 1)), X]),
                        np.concatenate([[0.0], penalties]),
                        ["intercept"] + [("rule", (k,)) for k in range(X.shape[1])])


def random_design(rng, family, n, p, lam_scale=0.05):
    X = (rng.random((n, p)) < 0.5).astype(float)
    penalties = rng.uniform(0, lam_scale, p)
    y = rng.integers(0, 2, n).astype(float) if family == "logistic" else rng.standard_normal(n)
    return make_design(family, X, penalties), y


# ---- log_partition / predict_mean ----

def test_log_partition_values():
    assert log_partition("logistic", 0.0) == pytest.approx(math.log(2), abs=1e-12)
    assert log_partition("logistic", 1000.0) == 1000.0
    assert log_partition("linear", 3.0) == 4.5


def test_predict_mean_values():
    assert predict_mean("logistic", 0.0) == 0.5
    assert predict_mean("linear", -2.5) == -2.5
    p = float(predict_mean("logistic", 1e4))
    assert 1 - 1e-12 < p < 1


def test_unknown_family():
    with pytest.raises(ValueError):
        log_partition("poisson", 1.0)


# ---- objective ----

def test_objective_logistic_at_zero():
    y = np.array([0.0, 1.0, 0.0, 1.0])
    d = intercept_design("logistic", 4)
    assert objective(d, y, np.zeros(1)) == pytest.approx(math.log(2), abs=1e-12)


def test_objective_linear_at_zero():
    y = np.array([1.0, -2.0, 3.0])
    d = intercept_design("linear", 3)
    assert objective(d, y, np.zeros(1)) == pytest.approx(np.mean(y ** 2) / 2, abs=1e-12)


def test_objective_matches_scalar_rederivation():
    # single-column logistic toy, hand-set coefficients
    col = np.array([1.0, 0.0, 1.0, 0.0])
    y = np.array([1.0, 0.0, 0.0, 1.0])
    d = make_design("logistic", col.reshape(-1, 1), np.array([0.03]))
    beta = np.array([0.4, -1.3])
    expected = scalar_logistic_objective(d.X.tolist(), y.tolist(), beta.tolist(),
                                         d.penalties.tolist())
    assert objective(d, y, beta) == pytest.approx(expected, rel=1e-12)


def test_convexity_probe():
    rng = np.random.default_rng(0)
    for family in ("logistic", "linear"):
        d, y = random_design(rng, family, 12, 5)
        for _ in range(20):
            b1 = rng.standard_normal(d.p)
            b2 = rng.standard_normal(d.p)
            mid = objective(d, y, 0.5 * b1 + 0.5 * b2)
            assert mid <= 0.5 * objective(d, y, b1) + 0.5 * objective(d, y, b2) + 1e-10


# ---- gradient ----

def test_gradient_intercept_at_zero():
    y = np.array([1.0, 0.0, 0.0])
    d = intercept_design("logistic", 3)
    g = gradient_smooth(d, y, np.zeros(1))
    assert g[0] == pytest.approx(np.mean(0.5 - y), abs=1e-12)


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(7)
    for family in ("logistic", "linear"):
        d, y = random_design(rng, family, 5, 7)        # 5 x 8 with intercept
        beta = rng.standard_normal(d.p) * 0.5

        def smooth(b):
            return objective(d, y, b) - float(np.sum(d.penalties * np.abs(b)))

        approx = central_difference_gradient(smooth, beta, h=1e-6)
        exact = gradient_smooth(d, y, beta)
        rel = np.abs(approx - exact) / np.maximum(np.abs(exact), 1e-3)
        assert rel.max() <= 1e-5


def test_gradient_zero_at_least_squares():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((20, 3))
    y = rng.standard_normal(20)
    d = make_design("linear", X, np.zeros(3))
    beta, *_ = np.linalg.lstsq(d.X, y, rcond=None)
    assert np.abs(gradient_smooth(d, y, beta)).max() <= 1e-8


# ---- residuals ----

def test_residuals():
    y = np.ones(3)
    d = intercept_design("logistic", 3)
    assert np.allclose(residuals(d, y, np.zeros(1)), -0.5)

    rng = np.random.default_rng(2)
    X = rng.standard_normal((10, 2))
    dl = make_design("linear", X, np.zeros(2))
    beta, *_ = np.linalg.lstsq(dl.X, dl.X @ np.array([0.5, 1.0, -2.0]), rcond=None)
    y_fit = dl.X @ np.array([0.5, 1.0, -2.0])
    assert np.abs(residuals(dl, y_fit, np.array([0.5, 1.0, -2.0]))).max() == 0.0

    d2, y2 = random_design(rng, "logistic", 15, 4)
    r = residuals(d2, y2, rng.standard_normal(d2.p))
    assert np.all(r > -1) and np.all(r < 1)


# ---- solver ----

def test_total_shrinkage_gives_intercept_log_odds():
    rng = np.random.default_rng(3)
    X = (rng.random((40, 5)) < 0.5).astype(float)
    y = (rng.random(40) < 0.3).astype(float)
    d = make_design("logistic", X, np.full(5, 1e6))
    fit = fit_weighted_l1(d, y)
    assert fit.converged
    assert np.all(fit.beta[1:] == 0.0)
    p_bar = y.mean()
    assert fit.beta[0] == pytest.approx(math.log(p_bar / (1 - p_bar)), abs=1e-5)


def test_unpenalized_linear_matches_normal_equations():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((20, 3))
    y = rng.standard_normal(20)
    d = make_design("linear", X, np.zeros(3))
    fit = fit_weighted_l1(d, y, tol=1e-10)
    direct = np.linalg.solve(d.X.T @ d.X, d.X.T @ y)
    assert np.abs(fit.beta - direct).max() <= 1e-6


def test_separable_logistic_stays_finite_with_penalty():
    x = np.array([0., 0., 0., 1., 1., 1.])
    y = np.array([0., 0., 0., 1., 1., 1.])
    d = make_design("logistic", x.reshape(-1, 1), np.array([0.01]))
    fit = fit_weighted_l1(d, y)
    assert fit.converged
    assert np.all(np.isfinite(fit.beta))


def test_kkt_certificate_at_solution():
    rng = np.random.default_rng(5)
    tol = 1e-7
    for family in ("logistic", "linear"):
        for _ in range(5):
            d, y = random_design(rng, family, 30, 6)
            fit = fit_weighted_l1(d, y, tol=tol)
            assert fit.converged
            g = gradient_smooth(d, y, fit.beta)
            for k in range(d.p):
                if fit.beta[k] == 0:
                    assert abs(g[k]) <= d.penalties[k] + tol
                else:
                    assert abs(g[k] + d.penalties[k] * np.sign(fit.beta[k])) <= tol
            assert kkt_residual(d, y, fit.beta) <= tol


def test_monotone_descent_across_sweeps():
    rng = np.random.default_rng(6)
    for family in ("logistic", "linear"):
        d, y = random_design(rng, family, 25, 5)
        values = [objective(d, y, fit_weighted_l1(d, y, max_iter=k).beta)
                  for k in range(1, 12)]
        for a, b in zip(values, values[1:]):
            assert b <= a + 1e-12


def test_warm_start_converges_faster():
    rng = np.random.default_rng(8)
    d, y = random_design(rng, "logistic", 50, 8)
    cold = fit_weighted_l1(d, y)
    warm = fit_weighted_l1(d, y, warm=cold.beta)
    assert warm.sweeps <= cold.sweeps
    assert np.allclose(warm.beta, cold.beta, atol=1e-6)


def test_non_convergence_reports_kkt():
    rng = np.random.default_rng(9)
    d, y = random_design(rng, "logistic", 30, 5)
    fit = fit_weighted_l1(d, y, max_iter=1)
    assert not fit.converged
    assert np.isfinite(fit.kkt)
