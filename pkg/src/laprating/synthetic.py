"""Synthetic tennis-like corpus in the yearly ATP file layout.

Players carry a latent base strength that drifts as a random walk, plus a
fixed per-surface offset. Newcomers enter below their eventual level and
improve over their first seasons. Weekly 32-player knockout tournaments are
drawn with stronger players entering more often, and outcomes follow the
Bradley-Terry model on the played surface. A small share of retirements,
walkovers and carpet events is mixed in so the ingestion filters have work
to do.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import MatchRecord, write_atp_csv
from .model_core import B_DEFAULT

SURFACE_WEIGHTS = {"hard": 0.56, "clay": 0.31, "grass": 0.12, "carpet": 0.01}


@dataclass
class SynthConfig:
    first_year: int = 2010
    last_year: int = 2019
    tournaments_per_week: float = 1.6
    draw_size: int = 32
    initial_players: int = 360
    entries_per_week: float = 0.8
    weekly_drift: float = 4.0
    base_sd: float = 130.0
    surface_sd: tuple = (60.0, 85.0, 40.0)  # clay, grass, hard
    newcomer_deficit: float = 260.0
    newcomer_weeks: float = 60.0
    incomplete_rate: float = 0.03
    entry_temperature: float = 140.0
    seed: int = 20240501


def generate_records(cfg: SynthConfig = SynthConfig()) -> list[MatchRecord]:
    rng = np.random.default_rng(cfg.seed)
    surfaces = ("clay", "grass", "hard")
    s_names = list(SURFACE_WEIGHTS)
    s_probs = np.array(list(SURFACE_WEIGHTS.values()))
    s_probs = s_probs / s_probs.sum()

    base, offset, potential, debut, active = [], [], [], [], []

    def add_player(week, newcomer):
        pot = rng.normal(1500.0, cfg.base_sd)
        potential.append(pot)
        base.append(pot - (rng.uniform(0.5, 1.5) * cfg.newcomer_deficit if newcomer else 0.0))
        offset.append(rng.normal(0.0, cfg.surface_sd))
        debut.append(week)
        active.append(True)

    for _ in range(cfg.initial_players):
        add_player(-1000, False)

    start = dt.date(cfg.first_year, 1, 4)
    start -= dt.timedelta(days=start.weekday())
    end = dt.date(cfg.last_year, 12, 31)
    records = []
    week = 0
    day = start
    while day <= end:
        # dynamics: drift for everyone, catch-up for newcomers, retire/enter
        n = len(base)
        b = np.asarray(base)
        gap = np.asarray(potential) - b
        young = (week - np.asarray(debut)) < 4 * cfg.newcomer_weeks
        b = b + rng.normal(0.0, cfg.weekly_drift, n) + np.where(young, gap / cfg.newcomer_weeks, 0.0)
        base[:] = b.tolist()
        n_active = sum(active)
        for i in np.flatnonzero(active):
            if rng.random() < cfg.entries_per_week / n_active:
                active[i] = False
        for _ in range(rng.poisson(cfg.entries_per_week)):
            add_player(week, True)

        ids = np.flatnonzero(active)
        for t in range(rng.poisson(cfg.tournaments_per_week)):
            surf = s_names[rng.choice(len(s_names), p=s_probs)]
            sidx = surfaces.index(surf) if surf in surfaces else 2
            strength = np.array([base[i] + offset[i][sidx] for i in ids])
            w = np.exp((strength - strength.max()) / cfg.entry_temperature)
            entrants = rng.choice(ids, size=cfg.draw_size, replace=False, p=w / w.sum())
            tid = f"{day.year}-{week:04d}-{t}"
            seq = 0
            order = list(rng.permutation(entrants))
            while len(order) > 1:
                nxt = []
                for a, c in zip(order[::2], order[1::2]):
                    diff = (base[a] + offset[a][sidx]) - (base[c] + offset[c][sidx])
                    pa = 1.0 / (1.0 + math.exp(-B_DEFAULT * diff))
                    win, lose = (a, c) if rng.random() < pa else (c, a)
                    seq += 1
                    score = "6-4 6-3"
                    u = rng.random()
                    if u < cfg.incomplete_rate:
                        score = ("6-3 2-1 RET", "W/O", "6-4 3-3 DEF")[int(u / cfg.incomplete_rate * 3)]
                    records.append(MatchRecord(day, tid, seq, str(100001 + int(win)),
                                               str(100001 + int(lose)), surf, score))
                    nxt.append(win)
                order = nxt
        day += dt.timedelta(days=7)
        week += 1
    records.sort()
    return records


def write_corpus(out_dir, cfg: SynthConfig = SynthConfig()) -> list[Path]:
    """Write ``atp_matches_YYYY.csv`` files for every year of the corpus."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    recs = generate_records(cfg)
    paths = []
    for year in range(cfg.first_year, cfg.last_year + 1):
        p = out / f"atp_matches_{year}.csv"
        write_atp_csv([r for r in recs if r.date.year == year], p)
        paths.append(p)
    return paths
