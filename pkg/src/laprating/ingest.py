"""Load yearly ATP match files into a filtered, chronologically ordered match list."""

from __future__ import annotations

import csv
import datetime as dt
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .surface import DEFAULT_SURFACES

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("tourney_date", "tourney_id", "match_num", "winner_id", "loser_id",
                    "surface", "score")
NORMALIZED_COLUMNS = ("date", "tourney_id", "match_num", "winner_id", "loser_id", "surface")
# incomplete matches: retirements, walkovers, defaults, weather abandonments
INCOMPLETE_TOKENS = ("RET", "W/O", "DEF", "WEA", "Walkover", "Def.")
_INCOMPLETE_RE = re.compile("|".join(re.escape(t) for t in INCOMPLETE_TOKENS), re.IGNORECASE)
FILE_PATTERN = "atp_matches_[0-9][0-9][0-9][0-9].csv"


class IngestError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class MatchRecord:
    date: dt.date
    tourney_id: str
    match_seq: int
    winner_id: str
    loser_id: str
    surface: str
    score_raw: str = field(default="", compare=False)

    @property
    def key(self) -> tuple:
        return (self.date, self.tourney_id, self.match_seq)


def parse_date(text: str) -> dt.date:
    return dt.datetime.strptime(text.strip(), "%Y%m%d").date()


def _parse_file(path: Path) -> tuple[list[MatchRecord], int]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"{path}: cannot read file ({exc})") from exc
    records, dropped = [], 0
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise IngestError(f"{path}: missing required column {col!r}")
        for row in reader:
            vals = {c: (row.get(c) or "").strip() for c in REQUIRED_COLUMNS}
            if not all(vals.values()):
                dropped += 1
                continue
            try:
                rec = MatchRecord(parse_date(vals["tourney_date"]), vals["tourney_id"],
                                  int(vals["match_num"]), vals["winner_id"], vals["loser_id"],
                                  vals["surface"].lower(), vals["score"])
            except ValueError:
                dropped += 1
                continue
            if rec.winner_id == rec.loser_id:
                dropped += 1
                continue
            records.append(rec)
    return records, dropped


def match_files(data_dir) -> list[Path]:
    files = sorted(Path(data_dir).glob(FILE_PATTERN))
    if not files:
        raise IngestError(f"{data_dir}: no files matching {FILE_PATTERN}")
    return files


def parse_matches(files) -> list[MatchRecord]:
    """Parse one or more match files (or a directory of yearly files).

    Rows with an empty or malformed required field are dropped and counted in
    the log. The result is sorted by ``(date, tourney_id, match_num)``.
    """
    if isinstance(files, (str, Path)) and Path(files).is_dir():
        files = match_files(files)
    elif isinstance(files, (str, Path)):
        files = [files]
    records, dropped = [], 0
    for path in files:
        recs, d = _parse_file(Path(path))
        records.extend(recs)
        dropped += d
    if dropped:
        log.warning("dropped %d row(s) with missing or malformed required fields", dropped)
    records.sort()
    return records


def is_incomplete(score: str) -> bool:
    return bool(_INCOMPLETE_RE.search(score))


def filter_matches(records: Iterable[MatchRecord], surfaces=DEFAULT_SURFACES) -> list[MatchRecord]:
    """Drop incomplete matches and matches on surfaces outside ``surfaces`` (carpet)."""
    keep = []
    for r in records:
        if is_incomplete(r.score_raw) or r.surface not in surfaces:
            continue
        keep.append(r)
    return keep


def parse_years(text) -> tuple[int, int]:
    """``"2010-2017"`` or ``"2018"`` -> inclusive year range."""
    if isinstance(text, (tuple, list)):
        return int(text[0]), int(text[1])
    parts = str(text).split("-")
    if len(parts) == 1:
        return int(parts[0]), int(parts[0])
    if len(parts) == 2:
        return int(parts[0]), int(parts[1])
    raise ValueError(f"bad year range {text!r}; expected 'YYYY' or 'YYYY-YYYY'")


@dataclass
class Dataset:
    train: list
    test: list
    surfaces: tuple = DEFAULT_SURFACES

    @property
    def all(self) -> list:
        return self.train + self.test

    @property
    def summary(self) -> dict:
        out = {}
        for split, recs in (("train", self.train), ("test", self.test)):
            c = Counter(r.surface for r in recs)
            out[split] = {"total": len(recs), **{s: c.get(s, 0) for s in self.surfaces}}
        out["all"] = {k: out["train"][k] + out["test"][k] for k in out["train"]}
        return out

    def summary_table(self) -> str:
        s = self.summary
        rows = [("", "Train", "Test", "Total"),
                ("Number of matches", s["train"]["total"], s["test"]["total"], s["all"]["total"])]
        order = sorted(self.surfaces, key=lambda x: -s["all"][x])
        for surf in order:
            rows.append((surf.capitalize(), s["train"][surf], s["test"][surf], s["all"][surf]))
        return "\n".join(f"{r[0]:<18}{r[1]:>8}{r[2]:>8}{r[3]:>8}" for r in rows)


def split_dataset(records: Sequence[MatchRecord], train_years=(2010, 2017),
                  test_years=(2018, 2019), surfaces=DEFAULT_SURFACES) -> Dataset:
    tr0, tr1 = parse_years(train_years)
    te0, te1 = parse_years(test_years)
    if tr0 > tr1:
        raise ValueError(f"empty train year range {tr0}-{tr1}")
    if te0 > te1:
        raise ValueError(f"empty test year range {te0}-{te1}")
    if tr1 >= te0:
        raise ValueError(f"train years {tr0}-{tr1} must end before test years {te0}-{te1}")
    ordered = sorted(records)
    train = [r for r in ordered if tr0 <= r.date.year <= tr1]
    test = [r for r in ordered if te0 <= r.date.year <= te1]
    return Dataset(train, test, tuple(surfaces))


def load_dataset(data_dir, train_years=(2010, 2017), test_years=(2018, 2019)) -> Dataset:
    tr0, _ = parse_years(train_years)
    _, te1 = parse_years(test_years)
    files = [p for p in match_files(data_dir) if tr0 <= int(p.stem[-4:]) <= te1]
    return split_dataset(filter_matches(parse_matches(files)), train_years, test_years)


def write_atp_csv(records: Iterable[MatchRecord], path) -> None:
    """Write records in the raw yearly-file layout (inverse of :func:`parse_matches`)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tourney_id", "surface", "tourney_date", "match_num", "winner_id",
                    "loser_id", "score"])
        for r in records:
            w.writerow([r.tourney_id, r.surface.capitalize(), r.date.strftime("%Y%m%d"),
                        r.match_seq, r.winner_id, r.loser_id, r.score_raw])


def write_normalized_csv(records: Iterable[MatchRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(NORMALIZED_COLUMNS)
        for r in records:
            w.writerow([r.date.isoformat(), r.tourney_id, r.match_seq, r.winner_id, r.loser_id,
                        r.surface])
