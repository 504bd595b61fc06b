import csv
import json
import os
import subprocess
import sys

import pytest

from katolab import cli


def run_json(capsys, *argv):
    code = cli.main(list(argv) + ["--format", "json"])
    out = capsys.readouterr().out
    return code, json.loads(out)


def strip_time(d):
    d = dict(d)
    d.pop("wall_time", None)
    return d


def test_helium_record(capsys):
    code, rec = run_json(capsys, "models", "--name", "helium", "--mass-ratio", "7294.29954")
    assert code == 0
    assert rec["outputs"]["count"] == 25585
    t = rec["targets"][0]
    assert t["passed"] and t["citation"]
    assert rec["seed"] == cli.DEFAULT_SEED
    assert rec["version"]


def test_positional_model_name(capsys):
    code, rec = run_json(capsys, "models", "helium")
    assert code == 0 and rec["inputs"]["name"] == "helium"


def test_determinism(capsys):
    a = run_json(capsys, "temple", "--trials", "10", "--seed", "42")[1]
    b = run_json(capsys, "temple", "--trials", "10", "--seed", "42")[1]
    assert json.dumps(strip_time(a), sort_keys=True) == json.dumps(strip_time(b), sort_keys=True)
    c = run_json(capsys, "temple", "--trials", "10", "--seed", "43")[1]
    assert c["experiment"] != a["experiment"]


def test_seed_precedence(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "c.toml"
    cfg.write_text("seed = 5\ntrials = 3\n")
    assert run_json(capsys, "temple", "--config", str(cfg))[1]["seed"] == 5
    monkeypatch.setenv("KATOLAB_SEED", "6")
    assert run_json(capsys, "temple", "--config", str(cfg))[1]["seed"] == 6
    assert run_json(capsys, "temple", "--config", str(cfg), "--seed", "7")[1]["seed"] == 7


def test_zero_series_pade(capsys):
    code, rec = run_json(capsys, "resum", "--series", "zero", "--pade", "3,3")
    assert code == 0
    assert rec["outputs"]["pade_value"] == 0


def test_target_miss_exit_code(capsys):
    # 20 terms of the geometric series cannot reach 2 to 1e-8 at z = 0.5
    code, rec = run_json(capsys, "resum", "--series", "geometric", "--z", "0.5", "--borel", "true", "--continuation", "taylor")
    assert code == 2 and not rec["passed"]


@pytest.mark.parametrize(
    "argv,msg",
    [
        (["adiabatic", "--T", "abc"], "args.T"),
        (["models", "--name", "hardy", "--nu", "x"], "args.nu"),
        (["models"], "models.name"),
        (["models", "half-pi", "--k-max", "10"], "widen momentum window"),
        (["models", "rank-one", "--sweep", "beta=1", "--sweep", "nu=3"], "one sweep axis only"),
    ],
)
def test_errors_exit_1(capsys, argv, msg):
    assert cli.main(argv) == 1
    assert msg in capsys.readouterr().err


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text("steps = 100\nbogus = 1\n")
    assert cli.main(["adiabatic", "--config", str(cfg)]) == 1
    assert "config.bogus" in capsys.readouterr().err


def test_adiabatic_csv_and_png(tmp_path):
    out = tmp_path / "a.csv"
    code = cli.main(["adiabatic", "--T", "25,50,100", "--steps", "800", "--out", str(out)])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["T", "defect"]
    assert [float(r[0]) for r in rows[1:]] == [25, 50, 100]
    png = tmp_path / "a.png"
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".katolab-")]


def test_sweep_order_and_monotone_energy(tmp_path):
    out = tmp_path / "s.csv"
    code = cli.main(["models", "rank-one", "--sweep", "beta=1e-4,1e-3,1e-2,1e-1", "--workers", "3", "--out", str(out)])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0][:2] == ["beta", "E"]
    betas = [float(r[0]) for r in rows[1:]]
    E = [float(r[1]) for r in rows[1:]]
    assert betas == [1e-4, 1e-3, 1e-2, 1e-1]
    assert all(b > a for a, b in zip(E, E[1:]))
    assert (tmp_path / "s.png").exists()


def test_sweep_matches_sequential_runs():
    cfg = cli.build_config("models", {}, {"name": "rank-one", "sweep": ["beta=1e-3,1e-2"], "workers": 2}, env={})
    recs = cli.sweep(cfg)
    for r, b in zip(recs, (1e-3, 1e-2)):
        single = cli.run(cli.build_config("models", {}, {"name": "rank-one", "beta": b}, env={}))
        assert r.outputs == single.outputs


def test_trotter_sweep_decreasing(capsys):
    code, rec = run_json(capsys, "resum", "--trotter", "10,20,40,80,160")
    assert code == 0
    errs = rec["outputs"]["trotter_error"]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_empty_sweep(capsys):
    code, rec = run_json(capsys, "models", "rank-one", "--sweep", "beta=")
    assert code == 0
    assert rec["records"] == []


def test_csv_uses_17_digits(tmp_path):
    out = tmp_path / "h.csv"
    cli.main(["models", "half-pi", "--grid", "300", "--k-min", "1e-3", "--k-max", "1e3", "--out", str(out)])
    row = list(csv.reader(out.open()))[1]
    assert row[0] == format(float(row[0]), ".17g")


def test_module_entry_point(tmp_path):
    out = tmp_path / "r.json"
    p = subprocess.run(
        [sys.executable, "-m", "katolab", "models", "helium", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert p.returncode == 0, p.stderr
    assert json.loads(out.read_text())["outputs"]["k_max"] == 42
