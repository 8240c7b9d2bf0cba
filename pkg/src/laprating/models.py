"""Rating models as named parameter sets, replayed over encoded match lists.

Every model maps a chronological list of matches to the pre-match win
probability of each match's eventual winner. The replay loops live in
:mod:`laprating.kernels`; Glicko, whose period batching does not fit the
per-match kernels, is replayed here in Python.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .baselines import GlickoParams, glicko_g, glicko_period_update
from .model_core import B_DEFAULT, MU_INIT, PlayerState, logistic
from .surface import DEFAULT_SURFACES, correlation_matrix, is_positive_definite
from .velo import ETA_MODES

MODEL_KINDS = ("elo", "velo", "genelo", "vgenelo", "glicko")
SURFACE_SIGMAS = ("sigma_clay", "sigma_grass", "sigma_hard")
SURFACE_RHOS = ("rho_cg", "rho_ch", "rho_gh")

DEFAULTS = {
    "elo": {"K": 32.0},
    "velo": {"sigma0": 80.0, "A": 0.0, "B": 0.0, "eta_mode": "proportional_to_L",
             "alpha": 0.0, "eta": 0.0},
    "genelo": {"sigma_clay": 90.0, "sigma_grass": 100.0, "sigma_hard": 80.0,
               "rho_cg": 0.5, "rho_ch": 0.7, "rho_gh": 0.8},
    "vgenelo": {"sigma_clay": 120.0, "sigma_grass": 130.0, "sigma_hard": 110.0,
                "rho_cg": 0.5, "rho_ch": 0.7, "rho_gh": 0.8, "A": 0.25, "B": 0.0},
    "glicko": {"sigma0": 200.0, "c": 10.0, "period": "month", "period_matches": 500},
}


def parse_value(text: str):
    """Parse a parameter value; accepts fractions such as ``1/5``."""
    text = text.strip()
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        return text


def parse_params(text: str) -> dict:
    """``"A=1/5,B=80,sigma0=110"`` -> ``{"A": 0.2, "B": 80.0, "sigma0": 110.0}``."""
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise ValueError(f"bad parameter {item!r}; expected name=value")
        k, v = item.split("=", 1)
        out[k.strip()] = parse_value(v)
    return out


@dataclass(frozen=True)
class MatchArrays:
    """Integer-coded chronological match list."""

    winner: np.ndarray
    loser: np.ndarray
    surface: np.ndarray
    player_ids: tuple
    winner_smaller: np.ndarray  # winner's ID sorts before the loser's
    dates: tuple = ()

    def __len__(self):
        return self.winner.shape[0]

    @property
    def n_players(self) -> int:
        return len(self.player_ids)


def encode(records: Sequence, surfaces=DEFAULT_SURFACES, player_ids=None) -> MatchArrays:
    """Encode match records; player indices follow sorted player IDs."""
    if player_ids is None:
        player_ids = sorted({r.winner_id for r in records} | {r.loser_id for r in records})
    index = {p: i for i, p in enumerate(player_ids)}
    sidx = {s: i for i, s in enumerate(surfaces)}
    w = np.fromiter((index[r.winner_id] for r in records), dtype=np.int64, count=len(records))
    l = np.fromiter((index[r.loser_id] for r in records), dtype=np.int64, count=len(records))
    s = np.fromiter((sidx[r.surface] for r in records), dtype=np.int64, count=len(records))
    smaller = np.fromiter((r.winner_id < r.loser_id for r in records), dtype=bool,
                          count=len(records))
    return MatchArrays(w, l, s, tuple(player_ids), smaller, tuple(r.date for r in records))


@dataclass
class Replay:
    p_winner: np.ndarray
    state: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Model:
    kind: str
    params: dict = field(default_factory=dict)
    mu0: float = MU_INIT
    b: float = B_DEFAULT

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model {self.kind!r}; choose from {MODEL_KINDS}")
        merged = dict(DEFAULTS[self.kind])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise ValueError(f"unknown parameter(s) for {self.kind}: {sorted(unknown)}")
        merged.update(self.params)
        object.__setattr__(self, "params", merged)
        self._validate()

    def _validate(self):
        p = self.params
        if "A" in p and not 0 <= p["A"] <= 1:
            raise ValueError(f"A must lie in [0, 1], got {p['A']}")
        if "B" in p and p["B"] < 0:
            raise ValueError(f"B must be nonnegative, got {p['B']}")
        if self.kind == "velo" and p["eta_mode"] not in ETA_MODES:
            raise ValueError(f"unknown eta_mode {p['eta_mode']!r}")
        if self.kind in ("genelo", "vgenelo"):
            if min(p[k] for k in SURFACE_SIGMAS) <= 0:
                raise ValueError("surface sigmas must be positive")
            if not is_positive_definite(self.rho):
                raise ValueError("surface correlations do not form a positive definite matrix")
        for k in ("sigma0", "K"):
            if k in p and not p[k] > 0:
                raise ValueError(f"{k} must be positive")

    @property
    def rho(self) -> np.ndarray:
        return correlation_matrix(3, [self.params[k] for k in SURFACE_RHOS])

    def with_params(self, **kw) -> "Model":
        return Model(self.kind, {**self.params, **kw}, self.mu0, self.b)

    def describe(self) -> str:
        return f"{self.kind}(" + ", ".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}"
                                           for k, v in self.params.items()) + ")"

    def replay(self, arrays: MatchArrays, state: dict | None = None,
               freeze_variance: bool = False, backend=None) -> Replay:
        """Run the model over ``arrays``; ``state`` continues from a previous replay.

        With ``freeze_variance`` the means keep updating but variances stay put.
        """
        kern = backend or kernels
        p = self.params
        n = arrays.n_players
        state = state or {}
        if self.kind == "elo":
            out, mu = kern.replay_elo(arrays.winner, arrays.loser, n, p["K"], self.mu0, self.b,
                                   state.get("mu"))
            return Replay(out, {"mu": mu})
        if self.kind == "velo":
            mode = ETA_MODES.index(p["eta_mode"])
            mode_param = (p["A"], p["alpha"], p["eta"] ** 2)[mode]
            B2 = p["B"] ** 2
            if freeze_variance:
                mode, mode_param, B2 = 0, 0.0, 0.0
            out, mu, var = kern.replay_velo(arrays.winner, arrays.loser, n, self.mu0,
                                         p["sigma0"] ** 2, mode, mode_param, B2, self.b,
                                         state.get("mu"), state.get("var"))
            return Replay(out, {"mu": mu, "var": var})
        if self.kind in ("genelo", "vgenelo"):
            s2 = np.array([p[k] for k in SURFACE_SIGMAS]) ** 2
            A = p.get("A", 0.0)
            B2 = p.get("B", 0.0) ** 2
            if freeze_variance:
                A, B2 = 0.0, 0.0
            out, mu, var = kern.replay_surface(arrays.winner, arrays.loser, arrays.surface, n,
                                            self.mu0, s2, self.rho, A, B2, self.b,
                                            state.get("mu"), state.get("var"))
            return Replay(out, {"mu": mu, "var": var})
        return self._replay_glicko(arrays, state)

    def _replay_glicko(self, arrays: MatchArrays, state: dict) -> Replay:
        p = self.params
        gp = GlickoParams(c2=p["c"] ** 2, sigma0_2=p["sigma0"] ** 2, period=p["period"],
                          period_matches=int(p["period_matches"]))
        n = arrays.n_players
        mu = np.array(state["mu"], dtype=float) if "mu" in state else np.full(n, self.mu0)
        var = np.array(state["var"], dtype=float) if "var" in state else np.full(n, gp.sigma0_2)
        if gp.period == "month":
            period_id = [d.year * 12 + d.month for d in arrays.dates]
        else:
            period_id = [t // gp.period_matches for t in range(len(arrays))]
        seen = np.array(state["seen"], dtype=bool) if "seen" in state else np.zeros(n, bool)
        out = np.empty(len(arrays))
        b = self.b
        W, L = arrays.winner.tolist(), arrays.loser.tolist()
        t, T = 0, len(arrays)
        last_period = state.get("period")
        while t < T:
            pid = period_id[t]
            if last_period is not None and pid - last_period > 1:
                # empty periods in between still advance the random walk
                var[seen] += gp.c2 * (pid - last_period - 1)
            games: dict[int, list] = {}
            while t < T and period_id[t] == pid:
                w, l = W[t], L[t]
                g = glicko_g(var[w] + var[l])
                out[t] = logistic(b * g * (mu[w] - mu[l]))
                games.setdefault(w, []).append((l, 1))
                games.setdefault(l, []).append((w, 0))
                t += 1
            snap_mu, snap_var = mu.copy(), var.copy()
            var[seen] += gp.c2
            for i, opps in games.items():
                me = PlayerState(snap_mu[i], snap_var[i])
                new = glicko_period_update(
                    me, [(PlayerState(snap_mu[j], snap_var[j]), s) for j, s in opps], gp)
                mu[i], var[i] = new.mu, new.sigma2
                seen[i] = True
            last_period = pid
        return Replay(out, {"mu": mu, "var": var, "seen": seen, "period": last_period})


def correct_flags(p_winner: np.ndarray, winner_smaller: np.ndarray) -> np.ndarray:
    """Whether the forecast picked the winner; an exact 0.5 picks the smaller player ID."""
    return (p_winner > 0.5) | ((p_winner == 0.5) & winner_smaller)


def neg_loglike_terms(p_winner: np.ndarray, eps: float = 1e-15) -> np.ndarray:
    return -np.log(np.clip(p_winner, eps, 1.0 - eps))
