"""Command line entry point: ``laprating <subcommand> [options]``.

Settings come from command line flags, then from the ``[run]`` section of an
INI file given with ``--config``, then from built-in defaults.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

CONFIG_HELP = """\
configuration file (INI, section [run]); keys mirror the long flags:
  data_dir, train_years, test_years, model, params, model2, params2,
  surface, output_dir, freeze_variance, workers
"""

PARAMS_HELP = ("model parameters as k=v,... (fractions allowed, e.g. A=1/5,B=80,sigma0=110) "
               "or the path of a fit_best.txt written by 'fit'")


@dataclass
class RunConfig:
    data_dir: str = "data"
    train_years: str = "2010-2017"
    test_years: str = "2018-2019"
    model: str = "velo"
    params: str = ""
    model2: str = "velo"
    params2: str = ""
    surface: str = ""
    output_dir: str = "."
    freeze_variance: bool = False
    workers: int = 1

    @classmethod
    def from_ini(cls, path) -> "RunConfig":
        cp = configparser.ConfigParser()
        if not cp.read(path):
            raise FileNotFoundError(f"cannot read config file {path}")
        if "run" not in cp:
            raise ValueError(f"{path}: missing [run] section")
        sec = cp["run"]
        known = {f.name: f for f in fields(cls)}
        unknown = set(sec) - set(known)
        if unknown:
            raise ValueError(f"{path}: unknown key(s) {sorted(unknown)}")
        kw = {}
        for k in sec:
            if known[k].type in ("bool", bool):
                kw[k] = sec.getboolean(k)
            elif known[k].type in ("int", int):
                kw[k] = sec.getint(k)
            else:
                kw[k] = sec[k]
        return cls(**kw)

    def to_ini(self, path) -> None:
        cp = configparser.ConfigParser()
        cp["run"] = {k: str(v) for k, v in asdict(self).items()}
        with open(path, "w") as fh:
            cp.write(fh)


def _fmt(x) -> str:
    return f"{x:.6g}" if isinstance(x, float) else str(x)


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_ini(args.config) if args.config else RunConfig()
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    return cfg


def _model(kind: str, params: str):
    from .fitting import read_fit_best
    from .models import Model, parse_params

    if params and Path(params).is_file():
        fitted_kind, p = read_fit_best(params)
        if fitted_kind != kind:
            raise ValueError(f"{params} holds a {fitted_kind} fit, not {kind}")
        return Model(kind, p)
    return Model(kind, parse_params(params))


def _dataset(cfg: RunConfig):
    from .evaluation import surface_restrict
    from .ingest import load_dataset

    ds = load_dataset(cfg.data_dir, cfg.train_years, cfg.test_years)
    if cfg.surface:
        ds = surface_restrict(ds, cfg.surface)
    return ds


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_ingest(cfg, args):
    from .ingest import write_normalized_csv

    ds = _dataset(cfg)
    out = _out(cfg)
    write_normalized_csv(ds.train, out / "train.csv")
    write_normalized_csv(ds.test, out / "test.csv")
    with open(out / "dataset_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["split", "total", *ds.surfaces])
        for split, row in ds.summary.items():
            w.writerow([split, row["total"], *(row[s] for s in ds.surfaces)])
    print(ds.summary_table())


def cmd_fit(cfg, args):
    from .fitting import default_space, fit, write_fit_outputs
    from .models import parse_params

    ds = _dataset(cfg)
    space = default_space(cfg.model)
    fixed = parse_params(cfg.params) if cfg.params else {}
    for k, v in fixed.items():
        space.grid.pop(k, None)
        space.bounds.pop(k, None)
        space.seed_grid.pop(k, None)
    space.fixed.update(fixed)
    result = fit(space, ds.train, workers=cfg.workers)
    write_fit_outputs(result, _out(cfg))
    print(f"model: {result.model.describe()}")
    print(f"train avg neg-loglike: {_fmt(result.train_avg_negloglike)}")
    print(f"evaluations: {len(result.evaluation_log)}")


def cmd_backtest(cfg, args):
    from .evaluation import backtest, write_backtest_csv

    model = _model(cfg.model, cfg.params)
    ds = _dataset(cfg)
    rep = backtest(model, ds, freeze_variance=cfg.freeze_variance)
    write_backtest_csv(rep, _out(cfg) / "backtest.csv")
    print(f"model: {model.describe()}")
    print(f"test matches: {len(rep)}")
    print(f"accuracy: {_fmt(rep.accuracy)}")
    print(f"avg neg-loglike: {_fmt(rep.avg_neg_loglike)}")


def cmd_mcnemar(cfg, args):
    from .evaluation import backtest, mcnemar_one_sided

    m1, m2 = _model(cfg.model, cfg.params), _model(cfg.model2, cfg.params2)
    ds = _dataset(cfg)
    r1 = backtest(m1, ds, cfg.freeze_variance)
    r2 = backtest(m2, ds, cfg.freeze_variance)
    res = mcnemar_one_sided(r1.correct, r2.correct)
    lines = [f"classifier 1: {m1.describe()} accuracy {_fmt(r1.accuracy)}",
             f"classifier 2: {m2.describe()} accuracy {_fmt(r2.accuracy)}",
             "H0: pi1 >= pi2 vs H1: pi1 < pi2",
             res.summary()]
    (_out(cfg) / "mcnemar.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))


def cmd_new_players(cfg, args):
    from .evaluation import new_player_analysis

    m0, m1 = _model(cfg.model, cfg.params), _model(cfg.model2, cfg.params2)
    ds = _dataset(cfg)
    ns = [int(x) for x in str(args.n).split(",")]
    path = _out(cfg) / "new_players.csv"
    print(f"{'n':>4} {'m01':>5} {'m10':>5} {'m00':>5} {'total':>6}")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", "n", "player_id", "accuracy_const", "accuracy_var"])
        for n in ns:
            c = new_player_analysis(m0, m1, ds.all, args.N, n)
            for pid, a0, a1 in c.players:
                w.writerow([c.N, c.n, pid, repr(a0), repr(a1)])
            print(f"{n:>4} {c.m01:>5} {c.m10:>5} {c.m00:>5} {c.total:>6}")


def cmd_residuals(cfg, args):
    from .evaluation import player_residuals, write_residuals_csv

    model = _model(cfg.model, cfg.params)
    ds = _dataset(cfg)
    pts = player_residuals(model, ds.all, args.player)
    path = write_residuals_csv(pts, args.player, _out(cfg))
    inside = sum(-0.5 < p.residual < 0.5 for p in pts)
    print(f"player {args.player}: {len(pts)} matches, {inside} with residual in (-0.5, 0.5)")
    print(f"wrote {path}")


def cmd_laplace_check(cfg, args):
    from .laplace import REFERENCE_LAPLACE_ERRORS, LAPLACE_ERROR_COLUMNS, laplace_error_grid

    rows = laplace_error_grid()
    path = _out(cfg) / "laplace_errors.csv"
    head = ["mu1", "mu2", "sigma1", "sigma2"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(head + list(LAPLACE_ERROR_COLUMNS) + [c + "_ref" for c in LAPLACE_ERROR_COLUMNS])
        for r in rows:
            cell = tuple(r[h] for h in head)
            ref = REFERENCE_LAPLACE_ERRORS[cell]
            w.writerow([*cell, *(repr(r[c]) for c in LAPLACE_ERROR_COLUMNS), *ref])
    print(" ".join(f"{h:>6}" for h in head) + "".join(f"{c:>15}" for c in LAPLACE_ERROR_COLUMNS))
    for r in rows:
        print(" ".join(f"{r[h]:>6g}" for h in head)
              + "".join(f"{_fmt(r[c]):>15}" for c in LAPLACE_ERROR_COLUMNS))
    ok = all(r["re_mode_mean"] <= r["re_step_mean"] for r in rows)
    print(f"mode mean error <= single-step mean error in every cell: {ok}")
    print(f"wrote {path}")


def cmd_trajectory(cfg, args):
    from .velo import naive_trajectory_check

    path = _out(cfg) / "naive_trajectory.csv"
    flagged = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sigma_j", "matches", "L", "sigma", "k", "L_ref", "sigma_ref", "k_ref",
                    "deviates"])
        for sj in (100.0, 200.0):
            print(f"opponent sigma_j = {sj:g}")
            print(f"{'matches':>8} {'L':>8} {'sigma':>8} {'k':>8}")
            for r in naive_trajectory_check(sj):
                bad = [c for c in ("L", "sigma", "k") if r[f"{c}_ok"] is False]
                flagged += bool(bad)
                w.writerow([sj, r["matches"], repr(r["L"]), repr(r["sigma"]), repr(r["k"]),
                            r["L_ref"], r["sigma_ref"], r["k_ref"], ";".join(bad)])
                mark = "  <- deviates: " + ",".join(bad) if bad else ""
                print(f"{r['matches']:>8} {r['L']:>8.3f} {r['sigma']:>8.2f} {r['k']:>8.1f}{mark}")
    print(f"{flagged} row(s) deviate beyond tolerance; wrote {path}")


def cmd_synth(cfg, args):
    from .synthetic import SynthConfig, write_corpus

    paths = write_corpus(_out(cfg), SynthConfig(seed=args.seed))
    print(f"wrote {len(paths)} yearly files to {cfg.output_dir}")


COMMANDS = {
    "ingest": (cmd_ingest, "ingest",
               "Load atp_matches_YYYY.csv files from --data-dir, drop incomplete and carpet "
               "matches, split by year. Writes train.csv and test.csv "
               "(date,tourney_id,match_num,winner_id,loser_id,surface) and dataset_summary.csv."),
    "fit": (cmd_fit, "fit",
            "Fit --model on the train years by minimizing average negative log-likelihood. "
            "Parameters given with --params are held fixed. Writes fit_log.csv "
            "(param_names...,neg_loglike) and fit_best.txt (INI; [fit] and [params])."),
    "backtest": (cmd_backtest, "backtest",
                 "Replay train, then forecast each test match before updating. Writes backtest.csv "
                 "(date,winner_id,loser_id,surface,p_hat_winner,correct)."),
    "mcnemar": (cmd_mcnemar, "mcnemar",
                "One-sided McNemar test that --model2/--params2 predicts the test set better than "
                "--model/--params. Writes mcnemar.txt."),
    "new-players": (cmd_new_players, "new-player analysis",
                    "Compare a constant-variance model (--model/--params) with a variance-updating "
                    "one (--model2/--params2) on the first n matches of players absent from the "
                    "first N matches. Writes new_players.csv (N,n,player_id,accuracy_const,"
                    "accuracy_var)."),
    "residuals": (cmd_residuals, "residuals",
                  "Per-match residuals s - p_hat for one player over all years. Writes "
                  "residuals_<player>.csv (index,date,opponent_id,surface,won,p_hat,residual)."),
    "laplace-check": (cmd_laplace_check, "laplace check",
                      "Relative errors of the converged-mode and single-step Laplace "
                      "approximations against numerical integration on the six reference "
                      "cells. Writes laplace_errors.csv."),
    "table1": (cmd_trajectory, "table1",
               "Naive variance trajectory from sigma=200 at p'=0.5 against opponents with "
               "sigma_j=100 and 200, compared with the published values. Writes naive_trajectory.csv."),
    "synth": (cmd_synth, "synth",
              "Write a deterministic synthetic corpus of atp_matches_YYYY.csv files to --output."),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--config", help=CONFIG_HELP)
    g.add_argument("--output", dest="output_dir", help="output directory (default .)")
    g.add_argument("--data-dir", dest="data_dir", help="directory of atp_matches_YYYY.csv files")
    g.add_argument("--train-years", help="train year range a-b (default 2010-2017)")
    g.add_argument("--test-years", help="test year range a-b (default 2018-2019)")
    g.add_argument("--model", choices=("elo", "velo", "genelo", "vgenelo", "glicko"),
                   help="model family (default velo)")
    g.add_argument("--params", help=PARAMS_HELP)
    g.add_argument("--model2", choices=("elo", "velo", "genelo", "vgenelo", "glicko"),
                   help="second model for mcnemar/new-players")
    g.add_argument("--params2", help="parameters of the second model, same format as --params")
    g.add_argument("--surface", help="restrict to one surface (clay, grass, hard)")
    g.add_argument("--freeze-variance", action="store_const", const=True, default=None,
                   help="stop variance updates during the test years")
    g.add_argument("--workers", type=int, help="threads for grid evaluation in fit")
    g.add_argument("-v", "--verbose", action="store_true", help="log progress")

    parser = argparse.ArgumentParser(prog="laprating",
                                     description="Paired-comparison ratings for tennis forecasting.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, _, text) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=text.split(".")[0], description=text)
        if name == "new-players":
            sp.add_argument("-N", type=int, default=5000, help="warm-up horizon in matches")
            sp.add_argument("-n", default="20,30,40", help="per-player window(s), comma separated")
        elif name == "residuals":
            sp.add_argument("--player", required=True, help="player ID")
        elif name == "synth":
            sp.add_argument("--seed", type=int, default=20240501, help="generator seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    func, stage, _ = COMMANDS[args.command]
    try:
        cfg = _load_config(args)
        func(cfg, args)
    except Exception as exc:  # every module error maps to exit status 1
        print(f"laprating: {stage} failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
