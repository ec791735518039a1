import pytest

from qrsim.config import (ConfigError, ExperimentConfig, config_from_dict,
                          config_to_dict, default_config_toml, load_config)


def test_default_toml_roundtrip(tmp_path):
    path = tmp_path / "cfg.toml"
    path.write_text(default_config_toml())
    cfg = load_config(path)
    ref = ExperimentConfig()
    assert cfg.resolution_cm == ref.resolution_cm
    assert cfg.base_cv == ref.base_cv
    assert cfg.alpha_endo_deg == ref.alpha_endo_deg
    assert len(cfg.roots) == 7
    assert [r.name for r in cfg.roots] == [r.name for r in ref.roots]
    assert cfg.electrodes == ref.electrodes
    assert cfg.scenarios == []
    assert cfg.jobs == 1


def test_dict_roundtrip():
    cfg = ExperimentConfig()
    cfg2 = config_from_dict(config_to_dict(cfg))
    assert config_to_dict(cfg2) == config_to_dict(cfg)


def test_partial_config():
    cfg = config_from_dict({"mesh": {"resolution_cm": 0.35},
                            "run": {"scenarios": ["baseline"], "jobs": 3}})
    assert cfg.resolution_cm == 0.35
    assert cfg.jobs == 3
    assert cfg.base_cv == (65.0, 48.0, 51.0, 100.0, 150.0)


def test_invalid_configs():
    with pytest.raises(ConfigError):
        config_from_dict({"mesh": {"source": "carrier-pigeon"}})
    with pytest.raises(ConfigError):
        config_from_dict({"mesh": {"source": "file"}})        # no path
    with pytest.raises(ConfigError):
        config_from_dict({"mesh": {"resolution_cm": -1}})
    with pytest.raises(ConfigError):
        config_from_dict({"run": {"jobs": 0}})
    with pytest.raises(ConfigError):
        config_from_dict({"electrodes": {"RA": [0, 0, 0]}})   # missing others
    with pytest.raises(ConfigError):
        config_from_dict({"roots": [{"name": "x", "ab": 2.0, "rt": 0.1}]})
    with pytest.raises(ConfigError):
        config_from_dict({"conduction": {"fiber_cm_s": -5}})


def test_bad_toml_file(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("[mesh\nresolution_cm = oops")
    with pytest.raises(ConfigError):
        load_config(path)
