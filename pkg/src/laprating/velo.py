"""Variance-incorporated Elo (vElo).

Per-match Laplace update of a scalar Gaussian belief about each player:
the mean moves by ``k_i (s - p)`` with a variance-dependent gain, and the
variance shrinks by a factor ``1 - A L_i`` (optionally with a random-walk
increment) subject to a floor ``B**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model_core import DEFAULT_SCALE, PlayerState, RatingScale, win_probability

ETA_MODES = ("proportional_to_L", "proportional_to_sigma2", "constant")


@dataclass(frozen=True)
class VeloParams:
    """Hyperparameters of the vElo variance update.

    eta_mode
        ``"proportional_to_L"``: ``sigma2 * (1 - A L)`` (the standard form).
        ``"proportional_to_sigma2"``: ``sigma2 * (1 - L + alpha)``.
        ``"constant"``: ``sigma2 * (1 - L) + eta**2``.
    In every mode the result is floored at ``B**2``.
    """

    A: float = 0.0
    B: float = 0.0
    eta_mode: str = "proportional_to_L"
    alpha: float = 0.0
    eta: float = 0.0
    scale: RatingScale = field(default=DEFAULT_SCALE)

    def __post_init__(self):
        if not 0.0 <= self.A <= 1.0:
            raise ValueError(f"A must lie in [0, 1], got {self.A!r}")
        if not self.B >= 0:
            raise ValueError(f"B must be nonnegative, got {self.B!r}")
        if self.eta_mode not in ETA_MODES:
            raise ValueError(f"unknown eta_mode {self.eta_mode!r}")
        if self.alpha < 0 or self.eta < 0:
            raise ValueError("alpha and eta must be nonnegative")

    @classmethod
    def from_alpha(cls, alpha: float, B: float = 0.0, **kw) -> "VeloParams":
        """Random-walk increment ``alpha * sigma2 * L``, i.e. ``A = 1 - alpha``."""
        return cls(A=1.0 - alpha, B=B, **kw)

    @property
    def mode_code(self) -> int:
        return ETA_MODES.index(self.eta_mode)

    @property
    def mode_param(self) -> float:
        return (self.A, self.alpha, self.eta**2)[self.mode_code]


def _check_p(p):
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie strictly in (0, 1), got {p!r}")


def shrink_constant_C(p_ij: float, sigma2_i: float, sigma2_j: float,
                      scale: RatingScale = DEFAULT_SCALE) -> float:
    _check_p(p_ij)
    if sigma2_i <= 0 or sigma2_j <= 0:
        raise ValueError("variances must be positive")
    return 1.0 / (1.0 + scale.b**2 * p_ij * (1.0 - p_ij) * (sigma2_i + sigma2_j))


def k_factor(sigma2_i: float, p_hat: float, C: float, scale: RatingScale = DEFAULT_SCALE) -> float:
    """Elo-style gain ``b sigma_i^2 C``.

    ``p_hat`` is accepted for symmetry with the other helpers; it enters only
    through ``C``.
    """
    _check_p(p_hat)
    return scale.b * sigma2_i * C


def shrink_L(p_hat_prime: float, sigma2_i: float, sigma2_j: float,
             scale: RatingScale = DEFAULT_SCALE) -> float:
    """Relative variance reduction of player i after a match, in (0, 1)."""
    C = shrink_constant_C(p_hat_prime, sigma2_i, sigma2_j, scale)
    return p_hat_prime * (1.0 - p_hat_prime) * sigma2_i * scale.b**2 * C


def next_variance(sigma2: float, L: float, params: VeloParams) -> float:
    mode = params.eta_mode
    if mode == "proportional_to_L":
        v = sigma2 * (1.0 - params.A * L)
    elif mode == "proportional_to_sigma2":
        v = sigma2 * (1.0 - L + params.alpha)
    else:
        v = sigma2 * (1.0 - L) + params.eta**2
    return max(params.B**2, v)


def velo_update(state1: PlayerState, state2: PlayerState, winner: int,
                params: VeloParams = VeloParams()) -> tuple[PlayerState, PlayerState]:
    """One vElo match update; ``winner`` is 1 or 2.

    Both means are moved with the pre-match variances and probability, then a
    single post-update probability drives both variance updates.
    """
    if winner not in (1, 2):
        raise ValueError(f"winner must be 1 or 2, got {winner!r}")
    sc = params.scale
    s1 = 1.0 if winner == 1 else 0.0
    v1, v2 = state1.sigma2, state2.sigma2

    p12 = win_probability(state1.mu, state2.mu, sc)
    C = shrink_constant_C(p12, v1, v2, sc)
    mu1 = state1.mu + k_factor(v1, p12, C, sc) * (s1 - p12)
    mu2 = state2.mu + k_factor(v2, p12, C, sc) * ((1.0 - s1) - (1.0 - p12))

    p12n = win_probability(mu1, mu2, sc)
    L1 = shrink_L(p12n, v1, v2, sc)
    L2 = shrink_L(p12n, v2, v1, sc)
    return (PlayerState(mu1, next_variance(v1, L1, params)),
            PlayerState(mu2, next_variance(v2, L2, params)))


def naive_trajectory(sigma_i0: float = 200.0, sigma_j: float = 100.0,
           checkpoints=(0, 25, 50, 100, 150, 200, 300, 400, 500),
           scale: RatingScale = DEFAULT_SCALE) -> list[dict]:
    """Trajectory of the naive rule ``sigma2 (1 - L)`` at ``p' = 0.5``.

    The opponent's deviation is held at ``sigma_j`` throughout. Each row holds
    the match count, the sigma after that many matches, and the ``L`` and gain
    ``k`` that sigma produces in the next match.
    """
    v = sigma_i0**2
    vj = sigma_j**2
    rows = []
    last = max(checkpoints)
    wanted = set(checkpoints)
    for n in range(last + 1):
        L = shrink_L(0.5, v, vj, scale)
        if n in wanted:
            k = k_factor(v, 0.5, shrink_constant_C(0.5, v, vj, scale), scale)
            rows.append({"matches": n, "L": L, "sigma": math.sqrt(v), "k": k})
        v = v * (1.0 - L)
    return rows


TRAJECTORY_CHECKPOINTS = (0, 25, 50, 100, 150, 200, 300, 400, 500)
# published trajectories for sigma_i0 = 200 against opponents with fixed sigma_j;
# the match-0 gain is published as 138.5 for both opponents, which only holds
# for sigma_j = 200 (sigma_j = 100 gives 162.8), so that one cell is not compared
REFERENCE_NAIVE_TRAJECTORY = {
    100.0: {"L": (None, 0.034, 0.018, 0.01, 0.006, 0.005, 0.003, 0.002, 0.002),
            "sigma": (200, 68.00, 49.54, 35.58, 29.20, 25.36, 20.76, 18.00, 16.12),
            "k": (None, 23.7, 12.8, 6.7, 4.5, 3.4, 2.3, 1.7, 1.4)},
    200.0: {"L": (None, 0.033, 0.018, 0.01, 0.006, 0.005, 0.003, 0.002, 0.002),
            "sigma": (200, 74.42, 54.55, 39.31, 32.30, 28.07, 22.99, 19.94, 17.86),
            "k": (138.5, 23.1, 12.6, 6.6, 4.5, 3.4, 2.3, 1.7, 1.4)},
}
TRAJECTORY_TOLERANCE = {"L": 1e-3, "sigma": 0.01, "k": 0.1}

# L at (p', sigma_i, sigma_j)
REFERENCE_L_VALUES = {
    (0.5, 120.0, 120.0): 0.096, (0.5, 120.0, 80.0): 0.102, (0.5, 80.0, 120.0): 0.045,
    (0.5, 80.0, 80.0): 0.048,
    (0.3, 120.0, 120.0): 0.083, (0.3, 120.0, 80.0): 0.088, (0.3, 80.0, 120.0): 0.039,
    (0.3, 80.0, 80.0): 0.041,
    (0.1, 120.0, 120.0): 0.040, (0.1, 120.0, 80.0): 0.040, (0.1, 80.0, 120.0): 0.018,
    (0.1, 80.0, 80.0): 0.018,
}


def naive_trajectory_check(sigma_j: float) -> list[dict]:
    """``naive_trajectory`` rows annotated with the published values and per-cell deviations."""
    ref = REFERENCE_NAIVE_TRAJECTORY[float(sigma_j)]
    rows = naive_trajectory(200.0, sigma_j, TRAJECTORY_CHECKPOINTS)
    for i, row in enumerate(rows):
        for col, tol in TRAJECTORY_TOLERANCE.items():
            want = ref[col][i]
            row[f"{col}_ref"] = want
            row[f"{col}_ok"] = None if want is None else abs(row[col] - want) <= tol
    return rows
