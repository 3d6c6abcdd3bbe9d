import csv

import pytest

from stabilyze import cli

SMALL = """\
[model]
name = {model}

[sweep]
gamma_values = {gammas}
chi_values = {chis}

[spectrum]
kind = loggrid
alpha_min = 1
alpha_max = 1e8
count = 40

[scan]
n_lambda = 300
n_times = 20
t_max = 200
"""


def write(tmp_path, model="timoshenko", gammas="0.5, 2", chis="0, 0.5", extra=""):
    path = tmp_path / "run.ini"
    path.write_text(SMALL.format(model=model, gammas=gammas, chis=chis) + extra)
    return path


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_fmt():
    assert cli.fmt(None) == "" and cli.fmt(True) == "true" and cli.fmt(-0.0) == "0"
    assert cli.fmt(1 / 3) == "0.333333333333" and cli.fmt(2.0) == "2" and cli.fmt(7) == "7"


def test_sweep_report(tmp_path):
    cfg = write(tmp_path)
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    text = (tmp_path / "o" / "report.csv").read_text()
    assert text.endswith("\n") and "\r" not in text
    assert text.splitlines()[0] == ",".join(cli.REPORT_COLUMNS)
    got = rows(tmp_path / "o" / "report.csv")
    assert [(r["gamma"], r["chi"]) for r in got] == [("0.5", "0"), ("0.5", "0.5"), ("2", "0"), ("2", "0.5")]
    assert [r["classification"] for r in got] == ["Exponential", "Semiuniform", "NotSemiuniform", "NotSemiuniform"]
    assert all(r["agree"] == "true" and r["status"] == "ok" for r in got)


def test_parallel_output_identical(tmp_path):
    cfg = write(tmp_path, gammas="0.5, 1")
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    assert (tmp_path / "a" / "report.csv").read_bytes() == (tmp_path / "b" / "report.csv").read_bytes()


def test_resume_skips_done_rows(tmp_path, monkeypatch):
    out = tmp_path / "o"
    cfg = write(tmp_path, gammas="2", chis="0")
    assert cli.main(["classify", "--config", str(cfg), "--out", str(out)]) == 0
    first = (out / "report.csv").read_bytes()
    cfg = write(tmp_path, gammas="2, 1.5", chis="0")
    calls = []
    real = cli.task_classify
    monkeypatch.setattr(cli, "task_classify", lambda c, g, x, p: calls.append(g) or real(c, g, x, p))
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(out), "--resume"]) == 0
    assert calls == [1.5]
    lines = (out / "report.csv").read_text().splitlines()
    assert [l.split(",")[0] for l in lines[1:]] == ["1.5", "2"]
    assert lines[2] == first.decode().splitlines()[1]


def test_failure_is_recorded_in_row(tmp_path, monkeypatch):
    from stabilyze.linalg import NumericalFailure

    def boom(*a, **k):
        raise NumericalFailure("no convergence")

    monkeypatch.setattr(cli.spectral, "classify", boom)
    cfg = write(tmp_path, gammas="0.5", chis="0")
    assert cli.main(["classify", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    (row,) = rows(tmp_path / "report.csv")
    assert row["status"] == "error:NumericalFailure" and row["classification"] == ""


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[params]\nchi = 5\n")
    assert cli.main(["classify", "--config", str(bad)]) == 1
    assert "b would be non-positive" in capsys.readouterr().err
    assert cli.main(["classify", "--config", str(tmp_path / "missing.ini")]) == 1
    empty = tmp_path / "plain.ini"
    empty.write_text("[params]\ngamma = 0.5\n")
    assert cli.main(["sweep", "--config", str(empty)]) == 1


def test_witness_files(tmp_path):
    cfg = write(tmp_path, gammas="0, 0.5, 1", chis="0")
    assert cli.main(["witness", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert not (tmp_path / "witness_0.5_0.csv").exists()  # no witness at the exponential point
    got = rows(tmp_path / "witness_1_0.csv")
    assert len(got) == 41 and got[-1]["kind"] == "summary:I"
    assert float(got[-1]["fitted_exponent"]) == pytest.approx(1.0, abs=0.05)
    assert float(got[-1]["predicted_exponent"]) == 1.0
    assert rows(tmp_path / "witness_0_0.csv")[-1]["kind"] == "summary:III"


def test_decay_scan_and_simulate(tmp_path):
    cfg = write(tmp_path, gammas="0.5", chis="0", extra="alpha = 4\ninitial = 1, 0, 0, 0, 0\n")
    out = str(tmp_path)
    assert cli.main(["decay", "--config", str(cfg), "--out", out]) == 0
    h = rows(tmp_path / "decay_0.5_0.csv")
    assert float(h[-1]["h"]) < 0.1 * float(h[0]["h"])
    assert len(rows(tmp_path / "decay_modes_0.5_0.csv")) == 40
    assert cli.main(["resolvent-scan", "--config", str(cfg), "--out", out]) == 0
    scan = rows(tmp_path / "scan_0.5_0.csv")
    assert len(scan) == 40 and min(float(r["sigma_min"]) for r in scan) > 1e-3
    assert cli.main(["simulate", "--config", str(cfg), "--out", out]) == 0
    sim = rows(tmp_path / "simulate_0.5_0.csv")
    assert len(sim) == 20 and float(sim[0]["energy"]) == pytest.approx(0.5)
    E = [float(r["energy"]) for r in sim]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(E, E[1:]))
    assert all(r["Lambda"] != "" for r in sim)


def test_waveheat_sweep(tmp_path):
    cfg = write(tmp_path, model="waveheat", gammas="0.25, 0.75", chis="0")
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert [r["classification"] for r in rows(tmp_path / "report.csv")] == ["Semiuniform", "Exponential"]
    assert cli.main(["witness", "--config", str(cfg), "--out", str(tmp_path)]) == 1
