import json
import os
import pytest
from initialization import (
    extract_experiment, extract_settings, fill_defaults, initialization,
    load_config_data
)
from conftest import config_data


def test_small_config_is_parsed(make_config, tmp_path):
    config = make_config()

    assert config.kind == "tail-sweep"
    assert config.epsilons == (0.4, 0.2, 0.1)
    assert config.grid.n_modes == 4
    assert config.solver.steps == 10
    assert config.solver.epsilon == 1.0
    assert config.output_dir == os.path.join(str(tmp_path), "results")


def test_missing_epsilons_name_the_field():
    data = config_data()
    data["experiment"].pop("epsilons")

    with pytest.raises(ValueError, match="experiment.epsilons"):
        extract_settings(data, "tail-sweep")


def test_epsilons_are_optional_for_single_runs():
    data = config_data()
    data["experiment"].pop("epsilons")

    with pytest.warns(UserWarning, match="epsilons"):
        config = extract_settings(data, "besov-verify")
    assert len(config.epsilons) > 0


def test_missing_optional_fields_warn_once():
    with pytest.warns(UserWarning) as record:
        fill_defaults("output", {}, {"directory": "results", "plots": 1})

    assert len(record) == 1
    assert "directory=results" in str(record[0].message)


def test_comment_keys_are_ignored():
    settings = fill_defaults("output", {"_note": "x", "directory": "a",
                                        "plots": 0},
                             {"directory": "results", "plots": 1})
    assert "_note" not in settings


@pytest.mark.parametrize("section, key, value", [
    ("experiment", "epsilons", [0.1, 0.2]),
    ("experiment", "epsilons", [0.1, -0.05]),
    ("experiment", "delta", 0.0),
    ("experiment", "beta", 0.3),
    ("experiment", "beta_prime", -0.1),
    ("experiment", "confidence", 1.0),
    ("experiment", "replicas", 0),
    ("experiment", "replicas", 2.5),
    ("experiment", "initial_data", "white"),
    ("experiment", "norm", "sobolev"),
    ("experiment", "p_list", []),
    ("experiment", "unknown_key", 1),
    ("solver", "scheme", "rk4"),
    ("solver", "n_modes", 0),
    ("solver", "horizon", -1.0),
])
def test_invalid_fields_are_rejected(section, key, value):
    data = config_data()
    data[section][key] = value

    with pytest.raises(ValueError):
        extract_settings(data, "tail-sweep")


def test_unknown_root_section_is_rejected():
    data = config_data()
    data["plotting"] = {}
    with pytest.raises(ValueError, match="plotting"):
        extract_settings(data)


def test_median_delta():
    config = extract_settings(config_data(experiment={"delta": "median"}),
                              "tail-sweep")
    assert config.delta is None
    assert config.to_dict()["experiment"]["delta"] == "median"


def test_kind_override():
    e = extract_experiment(config_data()["experiment"], "mode-ldp")
    assert e["kind"] == "mode-ldp"
    with pytest.raises(ValueError):
        extract_experiment(config_data()["experiment"], "fly")


def test_rate_evaluation_needs_a_trajectory():
    with pytest.raises(ValueError, match="trajectory"):
        extract_settings(config_data(), "rate-eval")


def test_snapshot_round_trips(make_config):
    config = make_config(kind="moment-scaling")
    again = extract_settings(config.to_dict())

    assert again == config


def test_output_override_and_absolute_paths(tmp_path):
    config = extract_settings(config_data(), "tail-sweep", output="elsewhere",
                              config_dir=str(tmp_path))
    assert config.output_dir == os.path.join(str(tmp_path), "elsewhere")

    absolute = os.path.join(str(tmp_path), "abs")
    config = extract_settings(config_data(), "tail-sweep", output=absolute,
                              config_dir="/nonexistent")
    assert config.output_dir == absolute


def test_initialization_creates_folders_and_logs(write_config):
    path = write_config()
    paths, config = initialization(path, verbose=False)

    for folder in ("outputDir", "logsDir", "plotsDir"):
        assert os.path.isdir(paths[folder])
    assert os.path.isfile(os.path.join(paths["logsDir"], "settings.json"))
    assert os.path.isfile(os.path.join(paths["logsDir"], "paths.json"))
    assert paths["outputs"] == {}


def test_manifests_are_read_as_config(write_config, tmp_path):
    path = write_config()
    manifest = os.path.join(str(tmp_path), "manifest.json")
    with open(manifest, "w") as f:
        json.dump({"manifest_version": 1, "command": "mode-ldp",
                   "config": config_data()}, f)

    data, command = load_config_data(manifest)
    assert command == "mode-ldp"
    assert data == config_data()

    assert load_config_data(path) == (config_data(), None)

    _, config = initialization(manifest, verbose=False)
    assert config.kind == "mode-ldp"
