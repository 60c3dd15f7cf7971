import json
import subprocess
import sys

import pytest

from efkpp import cli
from efkpp.errors import NoConvergence


def run(tmp_path, command, text, *extra, name="out"):
    cfg = tmp_path / f"{name}.ini"
    cfg.write_text(text)
    out = tmp_path / name
    code = cli.main([command, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


def test_speed(tmp_path, capsys):
    code, out = run(tmp_path, "speed", "[run]\ndelta = 0, 0.1\n")
    assert code == 0
    rows = json.loads((out / "speed.json").read_text())["speeds"]
    assert rows[0]["c_star"] == 2.0
    assert rows[1]["c_star"] == pytest.approx(1.9898, abs=1e-4)
    assert set(rows[1]) == {"delta", "eta_star", "c_star", "delta_bar"}
    assert capsys.readouterr().out.startswith("VERDICT: OK")


def test_merged_double_root_exits_3(tmp_path, capsys):
    code, _ = run(tmp_path, "speed", "[run]\ndelta = 0.2886751345948129\n")
    assert code == 3
    assert "double root merged" in capsys.readouterr().err


@pytest.mark.parametrize("text", ["[run]\ndelta =\n", "[grid]\nx_max = 2\n", "[run]\nbogus = 1\n"])
def test_config_errors_exit_2(tmp_path, text):
    assert run(tmp_path, "front", text)[0] == 2


def test_front(tmp_path):
    code, out = run(tmp_path, "front", "[run]\ndelta = 0.1\n")
    assert code == 0
    head = json.loads((out / "front_delta0.1.json").read_text())
    assert head["ode_residual"] <= 1e-7
    assert (out / "front_delta0.1.csv").read_text().splitlines()[1] == "x,q,dq,v"


def test_no_convergence_exits_4(tmp_path, monkeypatch):
    def failing(*a, **k):
        raise NoConvergence("stalled", [1.0, 0.5, 0.49])

    monkeypatch.setattr(cli, "front", failing)
    code, out = run(tmp_path, "front", "[run]\ndelta = 0.1\n")
    assert code == 4
    dump = json.loads((out / "nonconvergence.json").read_text())
    assert dump["residual_history"] == [1.0, 0.5, 0.49]


def test_spectrum(tmp_path):
    code, out = run(tmp_path, "spectrum", "[run]\ndelta = 0, 0.1\n")
    assert code == 0
    rows = json.loads((out / "spectrum.json").read_text())["borders"]
    assert all(r["minus_max_re"] == -1.0 for r in rows)


def test_evans_verdicts(tmp_path, capsys):
    code, out = run(tmp_path, "evans", "[run]\ndelta = 0.1\n")
    assert code == 0
    verdict = capsys.readouterr().out.strip()
    assert verdict.startswith("VERDICT: STABLE") and "resonance absent" in verdict
    assert json.loads((out / "evans.json").read_text())["scans"][0]["min_abs_E"] > 1e-3
    code, _ = run(tmp_path, "evans", "[run]\ndelta = 0.1\n[evans]\nthreshold = 10\n", name="strict")
    assert code == 5
    assert capsys.readouterr().out.startswith("VERDICT: UNSTABLE")


def test_evans_reuses_cached_front(tmp_path):
    code, out = run(tmp_path, "front", "[run]\ndelta = 0.1\n")
    cached = out / "front_delta0.1.csv"
    code, out2 = run(tmp_path, "evans", "[run]\ndelta = 0.1\n", "--front", str(cached), name="cached")
    code_fresh, out3 = run(tmp_path, "evans", "[run]\ndelta = 0.1\n", name="fresh")
    assert code == code_fresh == 0
    assert (out2 / "evans.json").read_bytes() == (out3 / "evans.json").read_bytes()


def test_scan(tmp_path, capsys):
    code, out = run(tmp_path, "scan", "[run]\ndelta = 0.1\n")
    assert code == 0
    row = json.loads((out / "scan.json").read_text())["spectra"][0]
    assert row["n_unstable_point_candidates"] == 0
    assert row["rayleigh_passed"] == row["rayleigh_total"]
    assert "no unstable point spectrum found" in capsys.readouterr().out


def test_simulate(tmp_path, capsys):
    code, out = run(tmp_path, "simulate", "[run]\ndelta = 0.1\n")
    assert code == 0
    row = json.loads((out / "simulate.json").read_text())["runs"][0]
    assert row["speed_error"] <= 0.02
    assert "selection confirmed" in capsys.readouterr().out


def test_outputs_are_deterministic(tmp_path):
    text = "[run]\ndelta = 0, 0.05\nseed = 3\n"
    for command in ("speed", "front", "evans"):
        _, a = run(tmp_path, command, text, name=f"{command}_a")
        _, b = run(tmp_path, command, text, "--jobs", "2", name=f"{command}_b")
        files = sorted(p.name for p in a.iterdir())
        assert files == sorted(p.name for p in b.iterdir())
        for name in files:
            assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_bad_jobs_flag(tmp_path):
    assert cli.main(["speed", "--jobs", "0", "--out", str(tmp_path)]) == 2


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "efkpp", "speed", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.startswith("VERDICT:")
