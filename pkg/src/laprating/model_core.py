"""Shared rating types and the Bradley-Terry win-probability kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Logit scale of the Elo convention, 10**(x/400) == exp(B_DEFAULT * x).
B_DEFAULT = math.log(10) / 400

MU_INIT = 1500.0


@dataclass(frozen=True)
class RatingScale:
    b: float = B_DEFAULT

    def __post_init__(self):
        if not (self.b > 0 and math.isfinite(self.b)):
            raise ValueError(f"scale b must be positive and finite, got {self.b!r}")


DEFAULT_SCALE = RatingScale()


@dataclass(frozen=True)
class PlayerState:
    """Gaussian belief ``N(mu, sigma2)`` about one player's strength."""

    mu: float = MU_INIT
    sigma2: float = 200.0**2

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2!r}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


def check_outcome(s) -> int:
    """Validate an outcome indicator and return it as an int in {0, 1}."""
    if s not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {s!r}")
    return int(s)


def logistic(x):
    """Overflow-free ``1 / (1 + exp(-x))``; works on scalars and arrays."""
    if np.ndim(x) == 0:
        x = float(x)
        if x >= 0:
            return 1.0 / (1.0 + math.exp(-x))
        z = math.exp(x)
        return z / (1.0 + z)
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    z = np.exp(x[~pos])
    out[~pos] = z / (1.0 + z)
    return out


def win_probability(mu_i: float, mu_j: float, scale: RatingScale = DEFAULT_SCALE) -> float:
    """P(i beats j) = exp(b mu_i) / (exp(b mu_i) + exp(b mu_j)).

    Evaluated through the rating difference so that large ratings do not
    overflow the exponentials.
    """
    if not (math.isfinite(mu_i) and math.isfinite(mu_j)):
        raise ValueError(f"ratings must be finite, got ({mu_i!r}, {mu_j!r})")
    return logistic(scale.b * (mu_i - mu_j))
