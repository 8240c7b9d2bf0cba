"""Hyperparameter estimation by minimizing the average negative log-likelihood.

Low-dimensional spaces are searched exhaustively. The six covariance
parameters of the surface models are searched by a coarse grid whose best
points seed bounded Nelder-Mead runs in coordinates scaled to the unit box.
Discrete menus (such as the ``(A, B)`` pairs) always form an outer
exhaustive loop.
"""

from __future__ import annotations

import configparser
import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .models import SURFACE_RHOS, SURFACE_SIGMAS, MatchArrays, Model, encode, neg_loglike_terms
from .surface import correlation_matrix, is_positive_definite

A_MENU = (0.0, 1.0, 1 / 2, 1 / 3, 1 / 4, 1 / 5)
B_MENU = (0.0, 50.0, 60.0, 75.0, 80.0, 100.0)
SIGMA_GRID = tuple(float(s) for s in range(50, 201, 5))
SIGMA_BOUNDS = (50.0, 200.0)
RHO_BOUNDS = (0.01, 0.99)
COARSE_SIGMAS = (60.0, 90.0, 120.0, 150.0)
COARSE_RHOS = (0.3, 0.6, 0.85)


@dataclass
class ParamSpace:
    """Search space for one model family.

    ``grid`` holds discrete candidate lists searched exhaustively, ``bounds``
    holds continuous parameters refined by simplex search (seeded from
    ``seed_grid``), and ``fixed`` pins the remaining parameters.
    """

    model: str
    grid: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    seed_grid: dict = field(default_factory=dict)
    fixed: dict = field(default_factory=dict)
    n_seeds: int = 10
    xatol: float = 1e-3
    max_fev: int = 1500

    def __post_init__(self):
        for name, values in self.grid.items():
            if len(values) == 0:
                raise ValueError(f"grid for {name!r} is empty")
            if not all(math.isfinite(float(v)) for v in values):
                raise ValueError(f"grid for {name!r} has non-finite values")
        for name, (lo, hi) in self.bounds.items():
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"bounds for {name!r} must be finite with lo < hi")
            seeds = self.seed_grid.get(name)
            if not seeds:
                raise ValueError(f"no seed values for continuous parameter {name!r}")
            if any(not lo <= s <= hi for s in seeds):
                raise ValueError(f"seed values for {name!r} fall outside its bounds")
        overlap = set(self.grid) & set(self.bounds)
        if overlap:
            raise ValueError(f"parameters both gridded and continuous: {sorted(overlap)}")

    @property
    def names(self) -> tuple:
        return tuple(self.grid) + tuple(self.bounds)

    def grid_points(self) -> list[dict]:
        keys = list(self.grid)
        return [dict(zip(keys, vals)) for vals in itertools.product(*(self.grid[k] for k in keys))]

    def contains(self, params: dict) -> bool:
        for k, vals in self.grid.items():
            if params[k] not in vals:
                return False
        return all(lo <= params[k] <= hi for k, (lo, hi) in self.bounds.items())


def default_space(model: str, **overrides) -> ParamSpace:
    """The search spaces used for the tennis experiments."""
    if model == "elo":
        space = ParamSpace("elo", grid={"K": tuple(float(k) for k in range(8, 65, 2))})
    elif model == "velo":
        space = ParamSpace("velo", grid={"sigma0": SIGMA_GRID, "A": A_MENU, "B": B_MENU})
    elif model in ("genelo", "vgenelo"):
        bounds = {k: SIGMA_BOUNDS for k in SURFACE_SIGMAS}
        bounds.update({k: RHO_BOUNDS for k in SURFACE_RHOS})
        seeds = {k: COARSE_SIGMAS for k in SURFACE_SIGMAS}
        seeds.update({k: COARSE_RHOS for k in SURFACE_RHOS})
        grid = {} if model == "genelo" else {"A": (1 / 4, 1 / 5), "B": (0.0, 80.0)}
        space = ParamSpace(model, grid=grid, bounds=bounds, seed_grid=seeds)
    else:
        raise ValueError(f"no default search space for model {model!r}")
    for k, v in overrides.items():
        setattr(space, k, v)
    space.__post_init__()
    return space


@dataclass
class FitResult:
    model: Model
    best_params: dict
    train_avg_negloglike: float
    evaluation_log: list  # (params dict, value) in evaluation order
    param_names: tuple = ()
    rejected: int = 0


def _as_arrays(matches, surfaces=None) -> MatchArrays:
    if isinstance(matches, MatchArrays):
        return matches
    return encode(list(matches)) if surfaces is None else encode(list(matches), surfaces)


def avg_neg_loglike(model: Model, matches) -> float:
    """Average negative log-likelihood of sequential forecasts from a fresh state.

    Every match counts, including each player's first appearance.
    """
    arrays = _as_arrays(matches)
    if len(arrays) == 0:
        raise ValueError("cannot evaluate the likelihood of an empty match list")
    p = model.replay(arrays).p_winner
    return float(neg_loglike_terms(p).sum() / len(p))


def _valid(model_kind: str, params: dict) -> bool:
    if all(k in params for k in SURFACE_RHOS):
        return is_positive_definite(correlation_matrix(3, [params[k] for k in SURFACE_RHOS]))
    return True


def _key(params: dict, names: Sequence[str]) -> tuple:
    return tuple(float(params[n]) for n in names)


class _Objective:
    """Memoized objective; records each distinct parameter point once."""

    def __init__(self, space: ParamSpace, arrays: MatchArrays, base: Model):
        self.space = space
        self.arrays = arrays
        self.base = base
        self.names = space.names
        self.cache: dict[tuple, float] = {}
        self.log: list = []

    def evaluate(self, params: dict) -> float:
        key = _key(params, self.names)
        if key in self.cache:
            return self.cache[key]
        value = avg_neg_loglike(self.base.with_params(**params), self.arrays)
        self.cache[key] = value
        self.log.append((dict(params), value))
        return value

    def evaluate_many(self, points: list[dict], workers: int = 1) -> list[float]:
        fresh = []
        seen = set()
        for p in points:
            k = _key(p, self.names)
            if k not in self.cache and k not in seen:
                seen.add(k)
                fresh.append(p)
        if workers > 1 and len(fresh) > 1:
            model = self.base

            def run(p):
                return avg_neg_loglike(model.with_params(**p), self.arrays)

            # the compiled kernels release the GIL, so threads run in parallel
            with ThreadPoolExecutor(max_workers=workers) as ex:
                values = list(ex.map(run, fresh))
            for p, v in zip(fresh, values):
                self.cache[_key(p, self.names)] = v
                self.log.append((dict(p), v))
        else:
            for p in fresh:
                self.evaluate(p)
        return [self.cache[_key(p, self.names)] for p in points]


def _best(entries, names):
    """Smallest value; ties go to the lexicographically smallest parameter tuple."""
    return min(entries, key=lambda e: (e[1], _key(e[0], names)))


def _simplex(obj: _Objective, menu: dict, start: dict, space: ParamSpace) -> None:
    names = list(space.bounds)
    lo = np.array([space.bounds[n][0] for n in names])
    hi = np.array([space.bounds[n][1] for n in names])

    def unscale(x):
        return dict(menu, **{n: float(v) for n, v in zip(names, lo + np.clip(x, 0, 1) * (hi - lo))})

    def f(x):
        params = unscale(x)
        if not _valid(space.model, params):
            return 1e6  # outside the positive definite region
        return obj.evaluate(params)

    x0 = (np.array([start[n] for n in names]) - lo) / (hi - lo)
    minimize(f, x0, method="Nelder-Mead", bounds=[(0.0, 1.0)] * len(names),
             options={"xatol": space.xatol, "fatol": np.inf, "maxfev": space.max_fev,
                      "initial_simplex": _initial_simplex(x0)})


def _initial_simplex(x0, step=0.08):
    n = x0.size
    sim = np.tile(x0, (n + 1, 1))
    for i in range(n):
        sim[i + 1, i] = x0[i] + step if x0[i] + step <= 1 else x0[i] - step
    return sim


def fit(space: ParamSpace, train, mu0: float = 1500.0, workers: int = 1) -> FitResult:
    """Minimize the training average negative log-likelihood over ``space``."""
    arrays = _as_arrays(train)
    if len(arrays) == 0:
        raise ValueError("cannot fit on an empty training set")
    base = Model(space.model, dict(space.fixed), mu0=mu0)
    obj = _Objective(space, arrays, base)
    menu_points = space.grid_points()
    rejected = 0

    if not space.bounds:
        valid = [p for p in menu_points if _valid(space.model, p)]
        rejected = len(menu_points) - len(valid)
        if not valid:
            raise ValueError("search space has no valid points")
        obj.evaluate_many(valid, workers)
    else:
        seed_keys = list(space.bounds)
        seed_points = [dict(zip(seed_keys, v))
                       for v in itertools.product(*(space.seed_grid[k] for k in seed_keys))]
        any_valid = False
        for menu in menu_points:
            pts = [dict(menu, **s) for s in seed_points]
            valid = [p for p in pts if _valid(space.model, p)]
            rejected += len(pts) - len(valid)
            if not valid:
                continue
            any_valid = True
            values = obj.evaluate_many(valid, workers)
            ranked = sorted(zip(valid, values), key=lambda e: (e[1], _key(e[0], obj.names)))
            for start, _ in ranked[:space.n_seeds]:
                _simplex(obj, menu, start, space)
        if not any_valid:
            raise ValueError("search space has no valid points")

    best_params, best_value = _best(obj.log, obj.names)
    return FitResult(base.with_params(**best_params), best_params, best_value, obj.log,
                     obj.names, rejected)


def best_by(result: FitResult, group: Sequence[str]) -> dict:
    """Best log entry for each combination of the ``group`` parameters."""
    out: dict = {}
    for params, value in result.evaluation_log:
        g = tuple(params[k] for k in group)
        if g not in out or (value, _key(params, result.param_names)) < (
                out[g][1], _key(out[g][0], result.param_names)):
            out[g] = (params, value)
    return out


def write_fit_outputs(result: FitResult, out_dir) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "fit_log.csv"
    with open(log_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(result.param_names) + ["neg_loglike"])
        for params, value in result.evaluation_log:
            w.writerow([repr(float(params[n])) for n in result.param_names] + [repr(value)])
    best_path = out / "fit_best.txt"
    cfg = configparser.ConfigParser()
    cfg.optionxform = str
    cfg["fit"] = {"model": result.model.kind,
                  "train_avg_negloglike": repr(result.train_avg_negloglike),
                  "evaluations": str(len(result.evaluation_log))}
    cfg["params"] = {k: repr(v) if isinstance(v, float) else str(v)
                     for k, v in result.model.params.items()}
    with open(best_path, "w") as fh:
        cfg.write(fh)
    return log_path, best_path


def read_fit_best(path) -> tuple[str, dict]:
    """Read ``fit_best.txt`` back into ``(model kind, params)``."""
    from .models import parse_value

    cfg = configparser.ConfigParser()
    cfg.optionxform = str
    if not cfg.read(path):
        raise FileNotFoundError(f"{path}: cannot read fitted parameters")
    return cfg["fit"]["model"], {k: parse_value(v) for k, v in cfg["params"].items()}
