import math

import numpy as np
import pytest

from laprating.laplace import (REFERENCE_LAPLACE_ERRORS, ConvergenceError, LogPosteriorProblem, hessian,
                               jacobian, log_posterior, neg_inv_hessian_at, newton_step,
                               posterior_mode, posterior_moments_numeric, relative_error_mat,
                               relative_error_vec, scalar_problem, laplace_error_row)
from laprating.model_core import B_DEFAULT
from laprating.surface import block_prior, closed_form_update
from tests.test_surface import random_cov


def transcribed_log_posterior(theta, mu, Sigma, m, s):
    """Log-posterior written with an explicit inverse and log of the win probability."""
    n = len(mu) // 2
    r = np.asarray(theta) - mu
    p = 1.0 / (1.0 + math.exp(-B_DEFAULT * (theta[m] - theta[n + m])))
    return -0.5 * r @ np.linalg.inv(Sigma) @ r + (math.log(p) if s else math.log(1 - p))


def problem(rng, n):
    ci, cj = random_cov(rng, n), random_cov(rng, n)
    return LogPosteriorProblem(rng.uniform(1300, 1800, 2 * n), block_prior(ci, cj),
                               int(rng.integers(0, n)), int(rng.integers(0, 2))), ci, cj


def test_problem_validation():
    with pytest.raises(ValueError):
        LogPosteriorProblem(np.zeros(3), np.eye(3), 0, 1)
    S = np.eye(2)
    S[0, 1] = S[1, 0] = 0.1
    with pytest.raises(ValueError):
        LogPosteriorProblem(np.zeros(2), S, 0, 1)
    with pytest.raises(np.linalg.LinAlgError):
        LogPosteriorProblem(np.zeros(2), np.diag([1.0, -1.0]), 0, 1)
    with pytest.raises(ValueError):
        LogPosteriorProblem(np.zeros(2), np.eye(2), 1, 1)


def test_log_posterior_at_prior_mean():
    prob = scalar_problem(1600, 1500, 80, 90, 1)
    assert log_posterior(prob.mu, prob) == pytest.approx(math.log(1 / (1 + 10 ** (-0.25))), rel=1e-14)


def test_log_posterior_differences_match_transcription():
    rng = np.random.default_rng(1)
    for _ in range(100):
        prob, _, _ = problem(rng, int(rng.integers(1, 4)))
        t1 = prob.mu + rng.normal(0, 60, prob.mu.size)
        t2 = prob.mu + rng.normal(0, 60, prob.mu.size)
        got = log_posterior(t1, prob) - log_posterior(t2, prob)
        want = (transcribed_log_posterior(t1, prob.mu, prob.Sigma, prob.m, prob.s_ij)
                - transcribed_log_posterior(t2, prob.mu, prob.Sigma, prob.m, prob.s_ij))
        assert got == pytest.approx(want, rel=1e-9, abs=1e-9)


def test_gradient_structure_at_prior_mean():
    rng = np.random.default_rng(2)
    prob, _, _ = problem(rng, 3)
    g = jacobian(prob.mu, prob)
    nz = np.flatnonzero(g)
    assert list(nz) == [prob.m, 3 + prob.m]
    p = prob.p_ij(prob.mu)
    assert g[prob.m] == pytest.approx(B_DEFAULT * (prob.s_ij - p), rel=1e-14)
    assert g[3 + prob.m] == -g[prob.m]
    D = hessian(prob.mu, prob) + prob.precision_times(np.eye(6))
    D[np.abs(D) < 1e-18] = 0
    assert np.count_nonzero(D) == 4
    np.testing.assert_allclose(np.abs(D[np.nonzero(D)]), B_DEFAULT**2 * p * (1 - p), rtol=1e-6)


def test_strict_concavity():
    rng = np.random.default_rng(3)
    for _ in range(200):
        prob, _, _ = problem(rng, int(rng.integers(1, 5)))
        theta = prob.mu + rng.normal(0, 200, prob.mu.size)
        assert np.linalg.eigvalsh(hessian(theta, prob)).max() < 0


def test_newton_step_matches_closed_forms():
    rng = np.random.default_rng(4)
    for _ in range(100):
        n = int(rng.integers(1, 5))
        prob, ci, cj = problem(rng, n)
        ref = newton_step(prob)
        got = closed_form_update(ci, cj, prob.mu, prob.s_ij, prob.m)
        assert relative_error_vec(got.mu_prime, ref.mu_prime) < 1e-10
        assert relative_error_mat(got.cov_prime, ref.cov_prime) < 1e-10
        assert np.allclose(ref.cov_prime, ref.cov_prime.T)


def test_posterior_mode():
    prob = scalar_problem(1500, 1500, 50, 50, 1)
    mode = posterior_mode(prob)
    assert np.linalg.norm(jacobian(mode, prob)) <= 1e-12
    assert np.linalg.eigvalsh(hessian(mode, prob)).max() < 0
    assert mode[0] > mode[1]
    assert np.max(np.abs(newton_step(prob).mu_prime - mode)) <= 1e-2
    with pytest.raises(ValueError):
        posterior_mode(prob, tol=0.0)
    with pytest.raises(ConvergenceError) as err:
        posterior_mode(scalar_problem(1500, 1900, 300, 300, 1), tol=1e-300, max_iter=1)
    assert len(err.value.trace) == 2


def test_quadrature_gaussian_case():
    prob = scalar_problem(1520, 1480, 60, 90, 1)
    est = posterior_moments_numeric(prob, likelihood=False)
    np.testing.assert_allclose(est.mean, prob.mu, rtol=1e-10)
    np.testing.assert_allclose(est.cov, prob.Sigma, rtol=1e-10, atol=1e-10 * 8100)
    assert est.quadrature_report["mass_rel_change"] <= 1e-9


def test_quadrature_relabeling_symmetry():
    a = posterior_moments_numeric(scalar_problem(1500, 1800, 50, 80, 1))
    b = posterior_moments_numeric(scalar_problem(1800, 1500, 80, 50, 0))
    np.testing.assert_allclose(a.mean, b.mean[::-1], rtol=1e-12)
    np.testing.assert_allclose(a.cov, b.cov[::-1, ::-1], rtol=1e-9)


def test_quadrature_rejects_surfaces():
    rng = np.random.default_rng(5)
    prob, _, _ = problem(rng, 2)
    with pytest.raises(ValueError):
        posterior_moments_numeric(prob)


def test_quadrature_reports_failure():
    with pytest.raises(ConvergenceError):
        posterior_moments_numeric(scalar_problem(1500, 1500, 50, 50, 1), order=2, rtol=1e-15,
                                  max_panels=8)


def test_relative_errors():
    v = np.array([1.0, -2.0, 3.0])
    assert relative_error_vec(v, v) == 0.0
    assert relative_error_vec(2 * v, v) == pytest.approx(1.0)
    M = np.arange(4.0).reshape(2, 2)
    assert relative_error_mat(2 * M, M) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        relative_error_vec(v, np.zeros(3))
    with pytest.raises(ValueError):
        relative_error_mat(M, np.zeros((2, 2)))


def test_laplace_error_row_layout():
    row = laplace_error_row(1500, 1500, 50, 50)
    assert set(REFERENCE_LAPLACE_ERRORS) >= {(1500, 1500, 50, 50)}
    assert row["re_mode_mean"] <= row["re_step_mean"]
    assert row["quadrature_nodes"] >= 16
    # covariance at the mode vs at the one-step mean differ by far less than the errors
    prob = scalar_problem(1500, 1500, 50, 50, 1)
    assert relative_error_mat(neg_inv_hessian_at(posterior_mode(prob), prob),
                              newton_step(prob).cov_prime) < 1e-4
