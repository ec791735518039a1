import json

import pytest

from qrsim.cli import main
from qrsim.config import default_config_toml
from qrsim.meshfile import load_mesh


def test_catalogue_print(capsys):
    assert main(["catalogue", "--print"]) == 0
    out = capsys.readouterr().out
    assert "scenario catalogue (18 entries)" in out
    assert "lateral_altcv_transmural" in out


def test_catalogue_json(capsys):
    assert main(["catalogue", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data) == 18


def test_config_default(capsys, tmp_path):
    assert main(["config"]) == 0
    text = capsys.readouterr().out
    assert text == default_config_toml()
    import sys
    if sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    tomllib.loads(text)


def test_mesh_generate(tmp_path, capsys):
    out = tmp_path / "mesh.txt"
    assert main(["mesh", "--generate", "--out", str(out), "--resolution", "0.5"]) == 0
    mesh = load_mesh(out)
    assert mesh.num_tets > 1000


def test_mesh_requires_generate(tmp_path, capsys):
    rc = main(["mesh", "--out", str(tmp_path / "m.txt")])
    assert rc == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "UsageError"


def test_simulate_subset(tmp_path, capsys):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(default_config_toml().replace("resolution_cm = 0.2",
                                                 "resolution_cm = 0.45"))
    out = tmp_path / "run"
    rc = main(["simulate", "--config", str(cfg), "--scenarios",
               "septal_subendocardial", "--out", str(out), "--jobs", "2"])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "septal_subendocardial" in printed
    assert (out / "dissimilarity.csv").exists()
    assert (out / "qrs_septal_subendocardial.csv").exists()


def test_simulate_bad_scenario_exit_code(tmp_path, capsys):
    rc = main(["simulate", "--scenarios", "bogus", "--out", str(tmp_path / "o")])
    assert rc == 1
    err = json.loads(capsys.readouterr().err)
    assert "bogus" in err["error"]["message"]
    assert err["error"]["status_code"] == 400
