"""Backtesting, paired McNemar comparison, new-player cohorts and residual series."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .ingest import Dataset
from .models import MatchArrays, Model, correct_flags, encode, neg_loglike_terms


def _slice(arrays: MatchArrays, start: int, stop: int | None = None) -> MatchArrays:
    sl = slice(start, stop)
    return MatchArrays(arrays.winner[sl], arrays.loser[sl], arrays.surface[sl],
                       arrays.player_ids, arrays.winner_smaller[sl], arrays.dates[sl])


@dataclass
class BacktestReport:
    model: Model
    records: list  # scored test matches
    p_winner: np.ndarray
    correct: np.ndarray
    accuracy: float
    avg_neg_loglike: float

    @property
    def per_match(self) -> list[tuple]:
        """``(match key, p_hat for the winner, correct, residual s - p_hat)`` per test match."""
        return [(r.key, float(p), bool(c), 1.0 - float(p))
                for r, p, c in zip(self.records, self.p_winner, self.correct)]

    def __len__(self):
        return len(self.records)


def backtest(model: Model, dataset: Dataset, freeze_variance: bool = False) -> BacktestReport:
    """Replay the train period unscored, then forecast each test match before updating it.

    With ``freeze_variance`` the variances stop changing once the test period starts.
    """
    if not dataset.test:
        raise ValueError("backtest needs a nonempty test set")
    records = dataset.all
    arrays = encode(records, dataset.surfaces)
    n_train = len(dataset.train)
    if freeze_variance:
        if model.kind == "glicko":
            raise ValueError("freeze_variance is not supported for glicko")
        state = model.replay(_slice(arrays, 0, n_train)).state if n_train else None
        p = model.replay(_slice(arrays, n_train), state, freeze_variance=True).p_winner
    else:
        p = model.replay(arrays).p_winner[n_train:]
    correct = correct_flags(p, arrays.winner_smaller[n_train:])
    return BacktestReport(model, list(dataset.test), p, correct, float(correct.mean()),
                          float(neg_loglike_terms(p).mean()))


def write_backtest_csv(report: BacktestReport, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "winner_id", "loser_id", "surface", "p_hat_winner", "correct"])
        for r, p, c in zip(report.records, report.p_winner, report.correct):
            w.writerow([r.date.isoformat(), r.winner_id, r.loser_id, r.surface, repr(float(p)),
                        int(c)])
    return path


@dataclass
class McNemarResult:
    n12: int  # first model right, second wrong
    n21: int  # first model wrong, second right
    Z: float | None
    p_value: float | None
    note: str = ""

    def summary(self) -> str:
        if self.Z is None:
            return f"n12={self.n12} n21={self.n21}: {self.note}"
        return f"n12={self.n12} n21={self.n21} Z={self.Z:.6g} p={self.p_value:.6g}"


def mcnemar_one_sided(flags1: Sequence[bool], flags2: Sequence[bool]) -> McNemarResult:
    """One-sided McNemar test that the second model predicts better than the first."""
    f1 = np.asarray(flags1, dtype=bool)
    f2 = np.asarray(flags2, dtype=bool)
    if f1.shape != f2.shape:
        raise ValueError(f"flag vectors differ in length: {f1.size} vs {f2.size}")
    n12 = int(np.count_nonzero(f1 & ~f2))
    n21 = int(np.count_nonzero(~f1 & f2))
    if n12 + n21 == 0:
        return McNemarResult(n12, n21, None, None, "no discordant pairs")
    z = (n21 - n12) / math.sqrt(n12 + n21)
    return McNemarResult(n12, n21, z, 0.5 * math.erfc(z / math.sqrt(2.0)))


@dataclass
class NewPlayerCounts:
    N: int
    n: int
    m01: int  # constant-variance model strictly better
    m10: int  # variance-updating model strictly better
    m00: int
    total: int
    players: list = field(default_factory=list)  # (player_id, acc_const, acc_var)


def new_player_analysis(model_const: Model, model_var: Model, records: Sequence, N: int,
                        n: int) -> NewPlayerCounts:
    """Compare both models on each new player's first ``n`` matches.

    New players are absent from the first ``N`` matches of ``records`` (the
    full chronological data) and have at least ``n`` matches in total.
    """
    if N <= 0 or n <= 0:
        raise ValueError(f"N and n must be positive, got N={N}, n={n}")
    records = list(records)
    arrays = encode(records)
    c0 = correct_flags(model_const.replay(arrays).p_winner, arrays.winner_smaller)
    c1 = correct_flags(model_var.replay(arrays).p_winner, arrays.winner_smaller)
    early = set(arrays.winner[:N].tolist()) | set(arrays.loser[:N].tolist())
    appearances: dict[int, list] = {}
    for t, (w, l) in enumerate(zip(arrays.winner.tolist(), arrays.loser.tolist())):
        for p in (w, l):
            if p not in early:
                appearances.setdefault(p, []).append(t)
    m01 = m10 = m00 = 0
    players = []
    for p in sorted(appearances, key=lambda i: arrays.player_ids[i]):
        idx = appearances[p]
        if len(idx) < n:
            continue
        idx = idx[:n]
        a0 = int(c0[idx].sum())
        a1 = int(c1[idx].sum())
        if a0 > a1:
            m01 += 1
        elif a1 > a0:
            m10 += 1
        else:
            m00 += 1
        players.append((arrays.player_ids[p], a0 / n, a1 / n))
    return NewPlayerCounts(N, n, m01, m10, m00, m01 + m10 + m00, players)


def write_new_players_csv(counts: NewPlayerCounts, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["player_id", "accuracy_const", "accuracy_var", "better"])
        for pid, a0, a1 in counts.players:
            w.writerow([pid, repr(a0), repr(a1), "const" if a0 > a1 else "var" if a1 > a0 else "tie"])
    return path


@dataclass
class ResidualPoint:
    index: int
    date: object
    opponent_id: str
    surface: str
    won: bool
    p_hat: float  # pre-match probability that the player wins
    residual: float


def player_residuals(model: Model, records: Sequence, player_id: str) -> list[ResidualPoint]:
    """Actual minus expected outcome from ``player_id``'s side, for each of their matches."""
    records = list(records)
    arrays = encode(records)
    if player_id not in set(arrays.player_ids):
        raise ValueError(f"unknown player {player_id!r}")
    p = model.replay(arrays).p_winner
    out = []
    for r, pw in zip(records, p.tolist()):
        if r.winner_id == player_id:
            out.append(ResidualPoint(len(out), r.date, r.loser_id, r.surface, True, pw, 1.0 - pw))
        elif r.loser_id == player_id:
            out.append(ResidualPoint(len(out), r.date, r.winner_id, r.surface, False, 1.0 - pw,
                                     pw - 1.0))
    return out


def write_residuals_csv(points: Sequence[ResidualPoint], player_id: str, out_dir) -> Path:
    path = Path(out_dir) / f"residuals_{player_id}.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "date", "opponent_id", "surface", "won", "p_hat", "residual"])
        for q in points:
            w.writerow([q.index, q.date.isoformat(), q.opponent_id, q.surface, int(q.won),
                        repr(q.p_hat), repr(q.residual)])
    return path


def surface_restrict(dataset: Dataset, label: str) -> Dataset:
    """Keep only matches on ``label``, preserving order."""
    label = label.lower()
    if label not in dataset.surfaces:
        raise ValueError(f"unknown surface {label!r}; choose from {dataset.surfaces}")
    return Dataset([r for r in dataset.train if r.surface == label],
                   [r for r in dataset.test if r.surface == label], dataset.surfaces)
