"""Paired-comparison rating with Laplace-approximation variance updates."""

from .model_core import DEFAULT_SCALE, PlayerState, RatingScale, logistic, win_probability
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "DEFAULT_SCALE", "PlayerState", "RatingScale", "logistic", "win_probability"]
