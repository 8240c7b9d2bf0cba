"""Surface-aware ratings: closed-form Laplace step for the GenElo Surface model.

A player's strength is a vector over ``n`` playing surfaces with a Gaussian
prior ``N(mu_i, Lambda_i)``. A match on surface ``m`` only observes the
``m``-th components, so the negative inverse Hessian of the log-posterior is a
rank-one correction of the prior covariance. That yields Elo-like updates in
which unplayed surfaces move in proportion to their correlation with ``m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model_core import DEFAULT_SCALE, MU_INIT, RatingScale, check_outcome, logistic
from .velo import VeloParams

DEFAULT_SURFACES = ("clay", "grass", "hard")


@dataclass(frozen=True)
class SurfaceSet:
    names: tuple = DEFAULT_SURFACES

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if not self.names:
            raise ValueError("need at least one surface")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"surface names must be distinct: {self.names}")

    @property
    def n(self) -> int:
        return len(self.names)

    def index(self, label: str) -> int:
        try:
            return self.names.index(label.lower())
        except ValueError:
            raise ValueError(f"unknown surface {label!r}; expected one of {self.names}") from None


def correlation_matrix(n: int, rho_pairs) -> np.ndarray:
    """Build a correlation matrix from its strict upper triangle, row by row.

    For ``n = 3`` the order is ``(rho_01, rho_02, rho_12)``, i.e.
    clay-grass, clay-hard, grass-hard with the default surface order.
    """
    rho = np.eye(n)
    iu = np.triu_indices(n, 1)
    vals = np.asarray(rho_pairs, dtype=float)
    if vals.shape != (len(iu[0]),):
        raise ValueError(f"expected {len(iu[0])} correlations for n={n}, got {vals.shape}")
    rho[iu] = vals
    rho.T[iu] = vals
    return rho


def is_positive_definite(a: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return False
    return True


@dataclass(frozen=True, eq=False)
class SurfaceCovariance:
    """Prior covariance ``Lambda = diag(sigma) rho diag(sigma)`` of one player."""

    sigma: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=float).copy()
        rho = np.asarray(self.rho, dtype=float).copy()
        n = sigma.shape[0]
        if sigma.ndim != 1 or np.any(sigma <= 0):
            raise ValueError("sigma must be a vector of positive reals")
        if rho.shape != (n, n):
            raise ValueError(f"rho must be {n}x{n}, got {rho.shape}")
        if not np.allclose(rho, rho.T, atol=1e-14, rtol=0) or not np.allclose(np.diag(rho), 1.0):
            raise ValueError("rho must be symmetric with unit diagonal")
        if np.any(np.abs(rho) > 1):
            raise ValueError("correlations must lie in [-1, 1]")
        if not is_positive_definite(rho):
            raise ValueError("rho is not positive definite")
        sigma.setflags(write=False)
        rho.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "rho", rho)

    @property
    def n(self) -> int:
        return self.sigma.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return self.rho * np.outer(self.sigma, self.sigma)


@dataclass(frozen=True, eq=False)
class SurfacePlayerState:
    mu: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float)
        s2 = np.array(self.sigma2, dtype=float)
        if mu.shape != s2.shape or mu.ndim != 1:
            raise ValueError("mu and sigma2 must be vectors of equal length")
        if np.any(s2 <= 0):
            raise ValueError("all sigma2 entries must be positive")
        mu.setflags(write=False)
        s2.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma2", s2)

    @classmethod
    def initial(cls, sigma: np.ndarray, mu0: float = MU_INIT) -> "SurfacePlayerState":
        sigma = np.asarray(sigma, dtype=float)
        return cls(np.full(sigma.shape, mu0), sigma**2)


@dataclass(frozen=True, eq=False)
class JointPosteriorApprox:
    mu_prime: np.ndarray
    cov_prime: np.ndarray


def _check(p, m, n):
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie strictly in (0, 1), got {p!r}")
    if not 0 <= m < n:
        raise ValueError(f"surface index {m} out of range for n={n}")


def block_prior(cov_i: SurfaceCovariance, cov_j: SurfaceCovariance) -> np.ndarray:
    n = cov_i.n
    S = np.zeros((2 * n, 2 * n))
    S[:n, :n] = cov_i.matrix
    S[n:, n:] = cov_j.matrix
    return S


def det_I_minus_DSigma(cov_i: SurfaceCovariance, cov_j: SurfaceCovariance, p_ij: float,
                       m: int, scale: RatingScale = DEFAULT_SCALE) -> float:
    return 1.0 + scale.b**2 * p_ij * (1.0 - p_ij) * (cov_i.sigma[m] ** 2 + cov_j.sigma[m] ** 2)


def neg_inv_hessian(cov_i: SurfaceCovariance, cov_j: SurfaceCovariance, p_ij: float, m: int,
                    scale: RatingScale = DEFAULT_SCALE) -> np.ndarray:
    """Closed-form ``-H^{-1} = Sigma + W`` of the two-player log-posterior.

    ``W = d / det(I - D Sigma) * u u^T`` with ``u = (Lambda_i[:, m], -Lambda_j[:, m])``
    and ``d = -b^2 p_ij p_ji``.
    """
    n = cov_i.n
    if cov_j.n != n:
        raise ValueError("players must have the same number of surfaces")
    _check(p_ij, m, n)
    Li, Lj = cov_i.matrix, cov_j.matrix
    d = -scale.b**2 * p_ij * (1.0 - p_ij)
    det = det_I_minus_DSigma(cov_i, cov_j, p_ij, m, scale)
    if not (det > 0 and math.isfinite(det)):
        raise ValueError("degenerate covariance")
    u = np.concatenate([Li[:, m], -Lj[:, m]])
    out = block_prior(cov_i, cov_j) + (d / det) * np.outer(u, u)
    return out


def gain_vectors(cov_i: SurfaceCovariance, cov_j: SurfaceCovariance, p_ij: float, m: int,
                 scale: RatingScale = DEFAULT_SCALE) -> tuple[np.ndarray, np.ndarray]:
    """Per-surface Elo gains ``k_i``, ``k_j`` at pre-match probability ``p_ij``."""
    _check(p_ij, m, cov_i.n)
    C = 1.0 / det_I_minus_DSigma(cov_i, cov_j, p_ij, m, scale)
    k_i = scale.b * C * cov_i.sigma[m] * cov_i.sigma * cov_i.rho[:, m]
    k_j = scale.b * C * cov_j.sigma[m] * cov_j.sigma * cov_j.rho[:, m]
    return k_i, k_j


def closed_form_step(cov_i: SurfaceCovariance, cov_j: SurfaceCovariance, mu: np.ndarray,
                     s_ij: int, m: int, scale: RatingScale = DEFAULT_SCALE,
                     p_ij: float | None = None) -> np.ndarray:
    """``-H^{-1}(mu) J(mu)`` as the stacked vector ``(k_i (s - p), k_j (s' - p'))``.

    ``p_ij`` overrides the model probability; it exists to probe the residual
    structure and is normally left unset.
    """
    n = cov_i.n
    mu = np.asarray(mu, dtype=float)
    s_ij = check_outcome(s_ij)
    if p_ij is None:
        p_ij = logistic(scale.b * (mu[m] - mu[n + m]))
    k_i, k_j = gain_vectors(cov_i, cov_j, p_ij, m, scale)
    r = s_ij - p_ij
    return np.concatenate([k_i * r, -k_j * r])


def closed_form_update(cov_i: SurfaceCovariance, cov_j: SurfaceCovariance, mu: np.ndarray,
                       s_ij: int, m: int, scale: RatingScale = DEFAULT_SCALE) -> JointPosteriorApprox:
    """Single-step Laplace pair ``(mu', -H^{-1}(mu'))`` from the closed forms."""
    n = cov_i.n
    mu_prime = np.asarray(mu, dtype=float) + closed_form_step(cov_i, cov_j, mu, s_ij, m, scale)
    p_prime = logistic(scale.b * (mu_prime[m] - mu_prime[n + m]))
    return JointPosteriorApprox(mu_prime, neg_inv_hessian(cov_i, cov_j, p_prime, m, scale))


def cross_surface_delta(delta_m: float, sigma_l: float, sigma_m: float, rho_ml: float) -> float:
    """Adjustment on surface ``l`` implied by an adjustment ``delta_m`` on the played surface."""
    if not sigma_m > 0:
        raise ValueError("sigma_m must be positive")
    return sigma_l / sigma_m * rho_ml * delta_m


def genelo_update(mu1: np.ndarray, mu2: np.ndarray, winner: int, cov: SurfaceCovariance, m: int,
                  scale: RatingScale = DEFAULT_SCALE) -> tuple[np.ndarray, np.ndarray]:
    """GenElo Surface mean update with a covariance shared by all players."""
    if winner not in (1, 2):
        raise ValueError(f"winner must be 1 or 2, got {winner!r}")
    mu1 = np.asarray(mu1, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    _check(0.5, m, cov.n)
    b = scale.b
    p12 = logistic(b * (mu1[m] - mu2[m]))
    C = 1.0 / (1.0 + 2.0 * b * b * p12 * (1.0 - p12) * cov.sigma[m] ** 2)
    k = cov.sigma[m] * cov.sigma * cov.rho[m, :] * b * C
    r = (1.0 if winner == 1 else 0.0) - p12
    return mu1 + k * r, mu2 - k * r


def vgenelo_update(state1: SurfacePlayerState, state2: SurfacePlayerState, winner: int,
                   rho: np.ndarray, m: int, params: VeloParams = VeloParams()
                   ) -> tuple[SurfacePlayerState, SurfacePlayerState]:
    """vGenElo Surface update: per-player surface variances, shared correlations.

    Only the ``proportional_to_L`` variance rule ``max(B^2, sigma2 (1 - A L))``
    is defined for this model.
    """
    if winner not in (1, 2):
        raise ValueError(f"winner must be 1 or 2, got {winner!r}")
    rho = np.asarray(rho, dtype=float)
    n = rho.shape[0]
    _check(0.5, m, n)
    b = params.scale.b
    v1, v2 = state1.sigma2, state2.sigma2
    sd1, sd2 = np.sqrt(v1), np.sqrt(v2)
    vm = v1[m] + v2[m]

    p12 = logistic(b * (state1.mu[m] - state2.mu[m]))
    C = 1.0 / (1.0 + b * b * p12 * (1.0 - p12) * vm)
    r = (1.0 if winner == 1 else 0.0) - p12
    mu1 = state1.mu + sd1 * sd1[m] * rho[m, :] * b * C * r
    mu2 = state2.mu - sd2 * sd2[m] * rho[m, :] * b * C * r

    q = logistic(b * (mu1[m] - mu2[m]))
    qq = q * (1.0 - q)
    Cn = 1.0 / (1.0 + b * b * qq * vm)
    L1 = qq * v1[m] * rho[m, :] ** 2 * b * b * Cn
    L2 = qq * v2[m] * rho[m, :] ** 2 * b * b * Cn
    B2 = params.B**2
    return (SurfacePlayerState(mu1, np.maximum(B2, v1 * (1.0 - params.A * L1))),
            SurfacePlayerState(mu2, np.maximum(B2, v2 * (1.0 - params.A * L2))))
