"""Dense reference computations for the two-player log-posterior.

Everything here works from the explicit log-posterior, its gradient and
Hessian, using generic linear algebra. The closed forms in
:mod:`laprating.surface` and :mod:`laprating.velo` are checked against these,
and the Laplace approximations are in turn checked against posterior moments
obtained by numerical integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import log_expit

from .model_core import DEFAULT_SCALE, RatingScale, check_outcome, logistic
from .surface import JointPosteriorApprox


class ConvergenceError(RuntimeError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


@dataclass(frozen=True, eq=False)
class LogPosteriorProblem:
    """Prior ``N(mu, Sigma)`` over ``theta = (theta_i, theta_j)`` plus one outcome.

    ``mu`` and ``Sigma`` have dimension ``2n``; the match is played on surface
    ``m`` and ``s_ij`` is 1 when player i wins.
    """

    mu: np.ndarray
    Sigma: np.ndarray
    m: int
    s_ij: int
    scale: RatingScale = field(default=DEFAULT_SCALE)

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        S = np.asarray(self.Sigma, dtype=float)
        if mu.ndim != 1 or mu.shape[0] % 2:
            raise ValueError("mu must be a vector of even length 2n")
        k = mu.shape[0]
        n = k // 2
        if S.shape != (k, k):
            raise ValueError(f"Sigma must be {k}x{k}")
        if np.any(S[:n, n:] != 0) or np.any(S[n:, :n] != 0):
            raise ValueError("players must be a priori independent (block-diagonal Sigma)")
        if not 0 <= self.m < n:
            raise ValueError(f"surface index {self.m} out of range for n={n}")
        check_outcome(self.s_ij)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "Sigma", S)
        # raises LinAlgError for a non-PD prior
        object.__setattr__(self, "_chol", cho_factor(S, lower=True))

    @property
    def n(self) -> int:
        return self.mu.shape[0] // 2

    def precision_times(self, x: np.ndarray) -> np.ndarray:
        return cho_solve(self._chol, x)

    def logit(self, theta) -> float:
        n = self.n
        return self.scale.b * (theta[self.m] - theta[n + self.m])

    def p_ij(self, theta) -> float:
        return logistic(self.logit(theta))


def log_posterior(theta, prob: LogPosteriorProblem) -> float:
    """Log-posterior density up to an additive constant."""
    theta = np.asarray(theta, dtype=float)
    r = theta - prob.mu
    x = prob.logit(theta)
    quad = -0.5 * r @ prob.precision_times(r)
    return float(quad + (log_expit(x) if prob.s_ij else log_expit(-x)))


def jacobian(theta, prob: LogPosteriorProblem) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    n, m, b = prob.n, prob.m, prob.scale.b
    g = -prob.precision_times(theta - prob.mu)
    v = b * (prob.s_ij - prob.p_ij(theta))
    g[m] += v
    g[n + m] -= v
    return g


def hessian(theta, prob: LogPosteriorProblem) -> np.ndarray:
    n, m, b = prob.n, prob.m, prob.scale.b
    k = 2 * n
    H = -prob.precision_times(np.eye(k))
    H = 0.5 * (H + H.T)
    p = prob.p_ij(theta)
    d = -b * b * p * (1.0 - p)
    H[m, m] += d
    H[n + m, n + m] += d
    H[m, n + m] -= d
    H[n + m, m] -= d
    return H


def _neg_inv(H: np.ndarray) -> np.ndarray:
    try:
        out = -np.linalg.solve(H, np.eye(H.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise ValueError("Hessian is singular") from exc
    return 0.5 * (out + out.T)


def neg_inv_hessian_at(theta, prob: LogPosteriorProblem) -> np.ndarray:
    return _neg_inv(hessian(theta, prob))


def newton_step(prob: LogPosteriorProblem) -> JointPosteriorApprox:
    """``mu' = mu - H(mu)^{-1} J(mu)`` and ``Sigma' = -H(mu')^{-1}`` by dense solves."""
    mu = prob.mu
    try:
        step = np.linalg.solve(hessian(mu, prob), jacobian(mu, prob))
    except np.linalg.LinAlgError as exc:
        raise ValueError("Hessian is singular") from exc
    mu_prime = mu - step
    return JointPosteriorApprox(mu_prime, neg_inv_hessian_at(mu_prime, prob))


def posterior_mode(prob: LogPosteriorProblem, tol: float = 1e-12, max_iter: int = 100) -> np.ndarray:
    """Full Newton iteration from the prior mean until ``|J| <= tol``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    theta = prob.mu.copy()
    trace = []
    for _ in range(max_iter + 1):
        g = jacobian(theta, prob)
        gn = float(np.linalg.norm(g))
        trace.append((theta.copy(), gn))
        if gn <= tol:
            return theta
        theta = theta - np.linalg.solve(hessian(theta, prob), g)
    raise ConvergenceError(f"Newton did not reach |J| <= {tol} in {max_iter} iterations "
                           f"(last |J| = {trace[-1][1]:.3e})", trace)


@dataclass(frozen=True, eq=False)
class MomentEstimate:
    mean: np.ndarray
    cov: np.ndarray
    quadrature_report: dict


def _gl_grid(lo: float, hi: float, panels: int, order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _moments_on_grid(prob: LogPosteriorProblem, sd: np.ndarray, width: float, panels: int,
                     order: int, likelihood: bool):
    # integrate in standardized coordinates z = (theta - mu) / sd
    z, w = _gl_grid(-width, width, panels, order)
    Z1, Z2 = np.meshgrid(z, z, indexing="ij")
    W = np.outer(w, w)
    logf = -0.5 * (Z1**2 + Z2**2)
    if likelihood:
        x = prob.scale.b * ((prob.mu[0] + sd[0] * Z1) - (prob.mu[1] + sd[1] * Z2))
        logf = logf + (log_expit(x) if prob.s_ij else log_expit(-x))
    f = W * np.exp(logf)
    mass = f.sum()
    e1 = (f * Z1).sum() / mass
    e2 = (f * Z2).sum() / mass
    d1, d2 = Z1 - e1, Z2 - e2
    c = np.array([[(f * d1 * d1).sum(), (f * d1 * d2).sum()],
                  [(f * d1 * d2).sum(), (f * d2 * d2).sum()]]) / mass
    mean = prob.mu + sd * np.array([e1, e2])
    cov = c * np.outer(sd, sd)
    # normalizing constant relative to the prior's, i.e. E_prior[likelihood]
    return mass / (2.0 * math.pi), mean, cov


def posterior_moments_numeric(prob: LogPosteriorProblem, width: float = 10.0, order: int = 16,
                              rtol: float = 1e-9, max_panels: int = 256,
                              likelihood: bool = True) -> MomentEstimate:
    """Posterior mean and covariance of an ``n = 1`` problem by 2-D quadrature.

    Tensor-product Gauss-Legendre panels on ``mu +- width * sigma``, with the
    panel count doubled until the mass, mean and covariance agree with the
    previous level to ``rtol``.
    """
    if prob.n != 1:
        raise ValueError("numerical moments are only available for n = 1 (two scalar strengths)")
    if prob.Sigma[0, 1] != 0:
        raise ValueError("expected independent priors")
    sd = np.sqrt(np.diag(prob.Sigma))
    panels = 2
    prev = _moments_on_grid(prob, sd, width, panels, order, likelihood)
    while True:
        panels *= 2
        cur = _moments_on_grid(prob, sd, width, panels, order, likelihood)
        mass_err = abs(cur[0] - prev[0]) / abs(cur[0])
        mean_err = float(np.max(np.abs(cur[1] - prev[1]) / sd))
        cov_err = float(np.max(np.abs(cur[2] - prev[2])) / np.max(np.abs(cur[2])))
        err = max(mass_err, mean_err, cov_err)
        if err <= rtol:
            break
        if panels >= max_panels:
            raise ConvergenceError(f"quadrature did not reach rtol={rtol}: achieved {err:.3e}")
        prev = cur
    report = {"width_sd": width, "order": order, "panels": panels,
              "nodes_per_axis": panels * order, "mass": cur[0],
              "mass_rel_change": mass_err, "mean_rel_change": mean_err, "cov_rel_change": cov_err}
    return MomentEstimate(cur[1], cur[2], report)


def relative_error_vec(a, ref) -> float:
    ref = np.asarray(ref, dtype=float)
    nr = np.linalg.norm(ref)
    if nr == 0:
        raise ValueError("reference vector has zero norm")
    return float(np.linalg.norm(np.asarray(a, dtype=float) - ref) / nr)


def relative_error_mat(A, Ref) -> float:
    Ref = np.asarray(Ref, dtype=float)
    nr = np.linalg.norm(Ref, "fro")
    if nr == 0:
        raise ValueError("reference matrix has zero norm")
    return float(np.linalg.norm(np.asarray(A, dtype=float) - Ref, "fro") / nr)


# (mu1, mu2, sigma1, sigma2) -> (re(theta*), re(-H^-1(theta*)), re(mu'), re(-H^-1(mu')))
# as published for the case where player 1 wins.
REFERENCE_LAPLACE_ERRORS = {
    (1500, 1500, 50, 50): (1.2e-06, 8.3e-04, 2.5e-06, 1.5e-02),
    (1500, 1500, 50, 80): (2.8e-05, 2.3e-03, 3.0e-05, 7.6e-03),
    (1500, 1800, 50, 50): (7.1e-05, 1.4e-03, 7.7e-05, 9.2e-03),
    (1500, 1800, 50, 80): (2.3e-04, 1.7e-03, 2.6e-04, 5.2e-03),
    (1500, 2000, 50, 50): (4.0e-05, 1.8e-03, 4.7e-05, 4.8e-03),
    (1500, 2000, 50, 80): (1.4e-04, 3.2e-03, 1.7e-04, 4.1e-03),
}
LAPLACE_ERROR_COLUMNS = ("re_mode_mean", "re_mode_cov", "re_step_mean", "re_step_cov")


def scalar_problem(mu1, mu2, sigma1, sigma2, s=1, scale=DEFAULT_SCALE) -> LogPosteriorProblem:
    return LogPosteriorProblem(np.array([mu1, mu2], dtype=float),
                               np.diag([float(sigma1) ** 2, float(sigma2) ** 2]), 0, s, scale)


def laplace_error_row(mu1, mu2, sigma1, sigma2, s=1) -> dict:
    """Relative errors of the converged and single-step Laplace approximations."""
    prob = scalar_problem(mu1, mu2, sigma1, sigma2, s)
    ref = posterior_moments_numeric(prob)
    mode = posterior_mode(prob)
    step = newton_step(prob)
    return {
        "mu1": mu1, "mu2": mu2, "sigma1": sigma1, "sigma2": sigma2,
        "re_mode_mean": relative_error_vec(mode, ref.mean),
        "re_mode_cov": relative_error_mat(neg_inv_hessian_at(mode, prob), ref.cov),
        "re_step_mean": relative_error_vec(step.mu_prime, ref.mean),
        "re_step_cov": relative_error_mat(step.cov_prime, ref.cov),
        "quadrature_nodes": ref.quadrature_report["nodes_per_axis"],
    }


def laplace_error_grid() -> list[dict]:
    return [laplace_error_row(*cell) for cell in REFERENCE_LAPLACE_ERRORS]
