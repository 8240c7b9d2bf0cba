import subprocess
import sys

import pytest

from laprating.cli import COMMANDS, RunConfig, main


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    assert main(["synth", "--output", str(d)]) == 0
    return d


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_help_lists_flags(capsys):
    for name in COMMANDS:
        with pytest.raises(SystemExit) as e:
            main([name, "--help"])
        assert e.value.code == 0
        text = capsys.readouterr().out
        for flag in ("--config", "--output", "--model", "--params", "--surface", "--train-years",
                     "--test-years"):
            assert flag in text


def test_usage_errors_exit_2(capsys):
    for argv in (["bogus"], ["backtest", "--nope"], ["backtest", "--model", "trueskill"], []):
        with pytest.raises(SystemExit) as e:
            main(argv)
        assert e.value.code == 2
    capsys.readouterr()


def test_module_error_exit_1(capsys, tmp_path):
    code, _, err = run(capsys, "backtest", "--data-dir", str(tmp_path / "none"))
    assert code == 1 and err.startswith("laprating: backtest failed:")
    code, _, err = run(capsys, "backtest", "--params", "K=3")
    assert code == 1 and "unknown parameter" in err


def test_config_round_trip(tmp_path):
    cfg = RunConfig(data_dir="/data/atp", train_years="2011-2016", model="vgenelo",
                    params="A=1/5,B=80", surface="hard", freeze_variance=True, workers=3)
    cfg.to_ini(tmp_path / "run.ini")
    assert RunConfig.from_ini(tmp_path / "run.ini") == cfg
    (tmp_path / "bad.ini").write_text("[run]\ncolour = red\n")
    with pytest.raises(ValueError, match="colour"):
        RunConfig.from_ini(tmp_path / "bad.ini")


def test_ingest(capsys, corpus, tmp_path):
    code, out, _ = run(capsys, "ingest", "--data-dir", str(corpus), "--output", str(tmp_path))
    assert code == 0 and "Number of matches" in out
    head = (tmp_path / "train.csv").read_text().splitlines()[0]
    assert head == "date,tourney_id,match_num,winner_id,loser_id,surface"


def test_fit_then_backtest_from_file(capsys, corpus, tmp_path):
    code, out, _ = run(capsys, "fit", "--data-dir", str(corpus), "--output", str(tmp_path),
                       "--model", "velo", "--params", "A=0,B=0", "--workers", "2")
    assert code == 0 and "train avg neg-loglike" in out
    log = (tmp_path / "fit_log.csv").read_text().splitlines()
    assert log[0] == "sigma0,neg_loglike" and len(log) == 32
    code, out, _ = run(capsys, "backtest", "--data-dir", str(corpus), "--output", str(tmp_path),
                       "--params", str(tmp_path / "fit_best.txt"))
    assert code == 0 and "accuracy:" in out


def test_backtest_reruns_are_byte_identical(capsys, corpus, tmp_path):
    outs = []
    for i in range(2):
        d = tmp_path / str(i)
        cfg = RunConfig(data_dir=str(corpus), model="vgenelo", params="A=1/4,B=80",
                        surface="hard", output_dir=str(d))
        cfg.to_ini(tmp_path / f"{i}.ini")
        code, out, _ = run(capsys, "backtest", "--config", str(tmp_path / f"{i}.ini"))
        assert code == 0
        outs.append((d / "backtest.csv").read_bytes())
    assert outs[0] == outs[1]
    assert b",clay," not in outs[0]


def test_mcnemar_and_new_players(capsys, corpus, tmp_path):
    common = ["--data-dir", str(corpus), "--output", str(tmp_path), "--params", "sigma0=90",
              "--params2", "sigma0=110,A=1/5,B=80"]
    code, out, _ = run(capsys, "mcnemar", *common)
    assert code == 0 and "Z=" in (tmp_path / "mcnemar.txt").read_text()
    code, out, _ = run(capsys, "new-players", *common, "-N", "5000", "-n", "20,30")
    assert code == 0
    assert (tmp_path / "new_players.csv").exists()


def test_residuals(capsys, corpus, tmp_path):
    code, out, _ = run(capsys, "residuals", "--data-dir", str(corpus), "--output", str(tmp_path),
                       "--player", "100001")
    assert code == 0 and (tmp_path / "residuals_100001.csv").exists()
    code, _, err = run(capsys, "residuals", "--data-dir", str(corpus), "--player", "nobody")
    assert code == 1 and "unknown player" in err


def test_trajectory_command(capsys, tmp_path):
    code, out, _ = run(capsys, "table1", "--output", str(tmp_path))
    assert code == 0 and "0 row(s) deviate" in out
    rows = (tmp_path / "naive_trajectory.csv").read_text().splitlines()
    assert len(rows) == 1 + 2 * 9


def test_console_script_entry():
    r = subprocess.run([sys.executable, "-m", "laprating.cli", "table1", "--help"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "table1" in r.stdout
