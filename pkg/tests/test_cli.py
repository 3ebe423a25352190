import json

import pytest

from fvqerr import cli
from fvqerr._csv import format_number, read_csv


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_catalog():
    cat = cli.list_experiments()
    assert set(cat) == {"kernels", "propagator", "scaling", "common-bath", "toric", "channels",
                        "weak-coupling-order"}
    assert list(cat) == sorted(cat)
    assert cli.list_experiments() == cat


@pytest.mark.parametrize("name", ["kernels", "channels", "propagator"])
def test_default_configs_run(tmp_path, name):
    cfg = {"experiment": name, "seed": 3, "output_dir": str(tmp_path / name)}
    assert cli.main(["run", write_config(tmp_path, cfg)]) == cli.EXIT_OK
    manifest = json.loads((tmp_path / name / "manifest.json").read_text())
    assert manifest["config"]["params"] == cli.list_experiments()[name]["defaults"]


def test_kernels_csv_format(tmp_path):
    cfg = {"experiment": "kernels", "output_dir": str(tmp_path), "params": {"n_tau": 5}}
    cli.run(cfg)
    header, rows = read_csv(tmp_path / "kernels.csv")
    assert header == ["tau", "ki", "kr"] and len(rows) == 5 and rows[0][1] == "0"


def test_scaling_eta_zero(tmp_path):
    cfg = {"experiment": "scaling", "output_dir": str(tmp_path),
           "params": {"ns": [1, 2], "ts": [5.0], "etas": [0.0]}}
    cli.run(cfg)
    _, rows = read_csv(tmp_path / "scaling.csv")
    assert [r[3] for r in rows] == ["0", "0"]


def test_determinism(tmp_path):
    cfg = {"experiment": "common-bath", "seed": 11,
           "params": {"n_values": [1, 2], "n_paths": 4, "n_modes": 10}}
    a = cli.run(dict(cfg, output_dir=str(tmp_path / "a")))
    b = cli.run(dict(cfg, output_dir=str(tmp_path / "b")))
    assert a["files"] == b["files"]
    c = cli.run(dict(cfg, seed=12, output_dir=str(tmp_path / "c")))
    assert c["files"]["common_bath.csv"] != a["files"]["common_bath.csv"]


def test_threads_do_not_change_output(tmp_path, monkeypatch):
    cfg = {"experiment": "scaling", "params": {"ns": [1, 2], "ts": [5.0], "etas": [0.01]}}
    a = cli.run(dict(cfg, output_dir=str(tmp_path / "a")))
    monkeypatch.setenv("FVQERR_THREADS", "4")
    b = cli.run(dict(cfg, output_dir=str(tmp_path / "b")))
    assert a["files"] == b["files"] and b["threads"] == 4


@pytest.mark.parametrize("cfg,field", [
    ({"experiment": "nope"}, "experiment"),
    ({"experiment": "kernels", "params": {"bogus": 1}}, "params.bogus"),
    ({"experiment": "kernels", "params": {"eta": "x"}}, "params.eta"),
    ({"experiment": "kernels", "params": {"eta": -1.0}}, "params"),
    ({"experiment": "kernels", "seed": -4}, "seed"),
    ({"experiment": "kernels", "extra": 1}, "extra"),
    ({"experiment": "scaling", "params": {"bath": {"Omega": "big"}}}, "params.bath.Omega"),
])
def test_config_errors(tmp_path, capsys, cfg, field):
    cfg = dict(cfg, output_dir=str(tmp_path / "o"))
    assert cli.main(["run", write_config(tmp_path, cfg)]) == cli.EXIT_CONFIG
    assert field in capsys.readouterr().err


def test_validate_and_list(tmp_path, capsys):
    assert cli.main(["validate", write_config(tmp_path, {"experiment": "toric"})]) == cli.EXIT_OK
    assert "ok: toric" in capsys.readouterr().out
    assert cli.main(["list"]) == cli.EXIT_OK
    assert "weak-coupling-order" in json.loads(capsys.readouterr().out)
    assert cli.main(["validate", str(tmp_path / "missing.json")]) == cli.EXIT_CONFIG


def test_convergence_exit_code(tmp_path, capsys):
    cfg = {"experiment": "weak-coupling-order", "output_dir": str(tmp_path),
           "params": {"n_steps": 4, "duration": 20.0, "mu": [8.0, 0.0, 3.0], "omega": 5.0}}
    assert cli.main(["run", write_config(tmp_path, cfg)]) == cli.EXIT_CONVERGENCE


def test_number_format():
    assert format_number(0.0) == "0"
    assert format_number(3) == "3"
    assert format_number(1e-5) == "1.0000000000000001e-05"
    assert format_number(0.25) == "0.25"
    assert float(format_number(1 / 3)) == 1 / 3
