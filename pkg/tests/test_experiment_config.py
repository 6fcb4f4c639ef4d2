import json

import pytest

from common.errors import ConfigError
from core.experiment import ExperimentConfig, load_config_document, parse_expected
from core.presets import PRESETS, get_preset
from dynamics.systems import SystemKind


def test_parse_expected_forms():
    assert parse_expected("1,2,*") == {0: 1, 1: 2}
    assert parse_expected("*,4") == {1: 4}
    assert parse_expected({"0": 1, "2": 1}) == {0: 1, 2: 1}
    assert parse_expected(None) is None
    with pytest.raises(ConfigError):
        parse_expected("1,x")


def test_preset_provides_base_document():
    cfg = ExperimentConfig.from_dict({"preset": "sphere-height", "seed": 3})
    assert cfg.system_kind is SystemKind.SPHERE_HEIGHT_GRADIENT
    assert (cfg.n, cfg.T, cfg.t, cfg.N) == (15, 1.5, 10, 200)
    assert cfg.expected == {0: 1, 1: 0, 2: 1}
    assert cfg.seed == 3


def test_overrides_win_over_preset():
    cfg = ExperimentConfig.from_dict({"preset": "torus-fourier", "N": 40, "t": 1})
    assert cfg.N == 40 and cfg.t == 1


def test_unknown_and_missing_keys():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"preset": "sphere-height", "colour": "red"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"system": "lorenz", "n": 10})


@pytest.mark.parametrize(
    "changes",
    [{"t": 15}, {"t": -1}, {"N": 1}, {"rho": 1.0}, {"r_max": 0.0}, {"cutoff": "median"}, {"formats": "png"}, {"threads": 0}, {"observation": "cubic"}],
)
def test_invalid_values_are_config_errors(changes):
    doc = {"preset": "sphere-height"}
    doc.update(changes)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(doc)


def test_sub_seeds_are_recorded_and_independent():
    a = ExperimentConfig.from_dict({"preset": "torus-scalar", "seed": 1})
    b = ExperimentConfig.from_dict({"preset": "torus-scalar", "seed": 1, "noise_sigma": 0.1})
    assert a.seeds == b.seeds
    assert set(a.seeds) == {"master", "initial_conditions", "landscape", "observation", "noise"}
    assert a.system.params["coefficient_seed"] == a.seeds["landscape"]
    assert a.observation.seed == a.seeds["observation"]
    forced = ExperimentConfig.from_dict({"preset": "torus-scalar", "seed": 1, "observation_seed": 99})
    assert forced.observation.seed == 99
    assert forced.seeds["initial_conditions"] == a.seeds["initial_conditions"]


def test_echo_reproduces_config():
    cfg = ExperimentConfig.from_dict({"preset": "lorenz-poly", "seed": 8, "r_max": 2.0})
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()
    json.dumps(cfg.to_dict(), allow_nan=False)


def test_load_config_document(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"preset": "lorenz-short"}))
    assert load_config_document(p) == {"preset": "lorenz-short"}
    with pytest.raises(ConfigError):
        load_config_document(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config_document(tmp_path / "bad.json")


def test_presets_table():
    assert len(PRESETS) == 6
    assert get_preset("Lorenz-Long").expected == {1: 4}
    assert get_preset("torus-scalar").published_N == 650
    with pytest.raises(ConfigError):
        get_preset("klein-bottle")
