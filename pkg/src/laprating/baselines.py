"""Classic Elo and the Glicko rating-period update, used as comparison baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .model_core import DEFAULT_SCALE, PlayerState, RatingScale, check_outcome, win_probability

DEFAULT_K = 32.0


def elo_update(state_i: PlayerState, state_j: PlayerState, s_ij: int, K: float = DEFAULT_K,
               scale: RatingScale = DEFAULT_SCALE) -> tuple[PlayerState, PlayerState]:
    """One Elo step ``mu + K (s - p)`` for both players; variances untouched."""
    if not K > 0:
        raise ValueError(f"K must be positive, got {K!r}")
    s_ij = check_outcome(s_ij)
    p_ij = win_probability(state_i.mu, state_j.mu, scale)
    delta = K * (s_ij - p_ij)
    return (PlayerState(state_i.mu + delta, state_i.sigma2),
            PlayerState(state_j.mu - delta, state_j.sigma2))


@dataclass(frozen=True)
class GlickoParams:
    """Glicko hyperparameters.

    ``period`` selects how matches are grouped into rating periods: ``"month"``
    (calendar month of the match date) or ``"matches"`` (consecutive blocks of
    ``period_matches`` matches).
    """

    c2: float = 0.0
    sigma0_2: float = 200.0**2
    period: str = "month"
    period_matches: int = 500

    def __post_init__(self):
        if not self.c2 >= 0:
            raise ValueError(f"c2 must be nonnegative, got {self.c2!r}")
        if not self.sigma0_2 > 0:
            raise ValueError(f"sigma0_2 must be positive, got {self.sigma0_2!r}")
        if self.period not in ("month", "matches"):
            raise ValueError(f"unknown rating period rule {self.period!r}")
        if self.period_matches < 1:
            raise ValueError("period_matches must be >= 1")


def glicko_g(sigma2: float, scale: RatingScale = DEFAULT_SCALE) -> float:
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be nonnegative, got {sigma2!r}")
    return 1.0 / math.sqrt(1.0 + 3.0 * scale.b**2 * sigma2 / math.pi**2)


def glicko_expected(mu_i: float, mu_j: float, sigma2_j: float,
                    scale: RatingScale = DEFAULT_SCALE) -> float:
    """Glicko's expected score of i against j, discounted by j's uncertainty."""
    g = glicko_g(sigma2_j, scale)
    # g * (mu_i - mu_j) on the rating scale is the same logit as the plain kernel
    return win_probability(g * mu_i, g * mu_j, scale)


def glicko_period_update(player: PlayerState, opponents: Sequence[tuple[PlayerState, int]],
                         params: GlickoParams, scale: RatingScale = DEFAULT_SCALE) -> PlayerState:
    """Update one player from all games of a rating period.

    ``opponents`` holds ``(start_of_period_state, s_ij)`` pairs; every state must
    come from the same start-of-period snapshot.
    """
    if not opponents:
        raise ValueError("a rating period update needs at least one game")
    b = scale.b
    score = 0.0
    info = 0.0
    for opp, s in opponents:
        s = check_outcome(s)
        g = glicko_g(opp.sigma2, scale)
        e = glicko_expected(player.mu, opp.mu, opp.sigma2, scale)
        score += g * (s - e)
        info += g * g * e * (1.0 - e)
    inv_delta2 = b * b * info
    post = 1.0 / (1.0 / player.sigma2 + inv_delta2)
    return PlayerState(player.mu + b * post * score, post + params.c2)


def glicko_inflate(state: PlayerState, params: GlickoParams) -> PlayerState:
    """Random-walk step for a player who sat out the period."""
    return PlayerState(state.mu, state.sigma2 + params.c2)


def glicko_periods(keys: Iterable, params: GlickoParams) -> list[int]:
    """Assign a rating-period index to each match.

    ``keys`` are match dates (``datetime.date``) in chronological order.
    """
    out = []
    if params.period == "matches":
        for n, _ in enumerate(keys):
            out.append(n // params.period_matches)
        return out
    last, idx = None, -1
    for d in keys:
        ym = (d.year, d.month)
        if ym != last:
            idx += 1
            last = ym
        out.append(idx)
    return out
