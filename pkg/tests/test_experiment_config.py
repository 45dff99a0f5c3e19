from pathlib import Path

import pytest
import yaml

from config.experiment import (
    METHOD_NAMES,
    ExperimentConfig,
    MethodConfig,
    WarpConfig,
    apply_overrides,
    dump_config,
    load_config,
    parse_config,
)
from src.models.base import KernelFamily, WarpFamily
from src.models.errors import ConfigError


def _raw(**extra):
    data = {"name": "tiny", "simulation": {"world": "box", "n_poses": 4}}
    data.update(extra)
    return data


def test_defaults_run_every_method_and_profile():
    config = parse_config(_raw())
    assert [m.name for m in config.methods] == list(METHOD_NAMES)
    assert config.profiles == ["Q1", "Q2", "Q3", "Q4", "Q5"]
    assert config.simulation.noise_profile == "Q3"
    assert config.map.resolution == 0.5


SE_ARD = KernelFamily.SQUARED_EXPONENTIAL_ARD
MATERN = KernelFamily.MATERN52


@pytest.mark.parametrize("name, kind, warped, family", [
    ("GPOM", "none", False, MATERN),
    ("WGPOM", "none", True, SE_ARD),
    ("GEK", "ek", False, MATERN),
    ("GESM", "esm", False, MATERN),
    ("WEK", "ek", True, SE_ARD),
    ("WESM", "esm", True, SE_ARD),
])
def test_presets(name, kind, warped, family):
    method = MethodConfig.preset(name.lower())
    assert method.name == name
    assert method.uncertainty.kind == kind
    assert method.kernel.family == family
    assert method.kernel.to_spec().family == family
    expected = WarpFamily.TANH_SUM if warped else WarpFamily.IDENTITY
    assert method.warp.family == expected


def test_preset_orders():
    assert MethodConfig.preset("GEK").uncertainty.order == 9
    assert MethodConfig.preset("WEK").uncertainty.expectation(seed=0).order == 9
    assert MethodConfig.preset("WGPOM").kernel.length_scales == (1.0, 1.0)
    assert MethodConfig.preset("GESM").uncertainty.n_samples == 10
    assert MethodConfig.preset("WEK").warp.to_spec().steps == 2


def test_unknown_method_is_a_config_error():
    with pytest.raises(ConfigError):
        MethodConfig.preset("GPX")
    with pytest.raises(ConfigError):
        parse_config(_raw(methods=["GPOM", "GPX"]))


def test_methods_mix_strings_and_mappings():
    config = parse_config(_raw(methods=[
        "GPOM",
        {"name": "custom", "kernel": {"family": "squared_exponential", "length_scales": [0.7]}},
    ]))
    assert [m.name for m in config.methods] == ["GPOM", "custom"]
    assert config.methods[1].kernel.to_spec().length_scales == (0.7,)


@pytest.mark.parametrize("data", [
    {"name": "none"},
    {"simulation": {}, "dataset": {"log": "a.log", "pose_track": "b.txt"}},
])
def test_exactly_one_source(data):
    with pytest.raises(ConfigError):
        parse_config(data)


@pytest.mark.parametrize("extra", [
    {"profiles": ["Q9"]},
    {"simulation": {"noise_profile": "Q0"}},
    {"methods": ["GPOM", "gpom"]},
    {"methods": []},
    {"schema_version": 2},
    {"map": {"resolution": -1}},
    {"colour": "blue"},
])
def test_invalid_configs(extra):
    with pytest.raises(ConfigError):
        parse_config(_raw(**extra))


def test_missing_dataset_files(tmp_path):
    data = {"dataset": {"log": str(tmp_path / "missing.log"), "pose_track": str(tmp_path / "poses.txt")}}
    with pytest.raises(ConfigError, match="does not exist"):
        parse_config(data)


def test_dotted_overrides():
    data = apply_overrides(_raw(), ["map.resolution=0.25", "methods=[GPOM,GEK]", "training.optimize=false"])
    config = parse_config(data)
    assert config.map.resolution == 0.25
    assert [m.name for m in config.methods] == ["GPOM", "GEK"]
    assert config.training.optimize is False


def test_override_creates_missing_sections():
    assert apply_overrides({}, ["a.b.c=3"]) == {"a": {"b": {"c": 3}}}


@pytest.mark.parametrize("override", ["map.resolution", "=3", "name.inner=3"])
def test_bad_overrides(override):
    with pytest.raises(ConfigError):
        apply_overrides(_raw(), [override])


def test_load_and_dump(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump(_raw(seed=11)))
    config = load_config(path, ["simulation.loop_radius=3.0"])
    assert config.seed == 11
    assert config.simulation.loop_radius == 3.0

    again = parse_config(yaml.safe_load(dump_config(config)))
    assert again == config


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.yaml")
    broken = tmp_path / "broken.yaml"
    broken.write_text("name: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(broken)
    listed = tmp_path / "list.yaml"
    listed.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(listed)


def test_for_profile_and_with_methods():
    config = parse_config(_raw())
    assert config.for_profile("q5").simulation.noise_profile == "Q5"
    assert config.simulation.noise_profile == "Q3"
    subset = config.with_methods(["gek", "GPOM"])
    assert [m.name for m in subset.methods] == ["GPOM", "GEK"]
    with pytest.raises(ConfigError):
        config.with_methods(["NOPE"])


def test_shipped_experiment_file_is_valid():
    config = load_config(Path(__file__).resolve().parents[1] / "config" / "experiments" / "star.yaml")
    assert isinstance(config, ExperimentConfig)
    assert config.simulation.world == "star"
    assert len(config.methods) == 6
