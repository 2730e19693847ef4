import json
import os
import pytest
from main import run_cli


def run(*argv) -> int:
    return run_cli(list(argv) + ["--quiet"])


def read_json(path: str) -> dict:
    with open(path) as f:
        return json.load(f)


def test_unknown_flag_is_a_usage_error(write_config):
    assert run_cli(["ldp-sweep", "--config", write_config(),
                    "--bogus"]) == 2
    assert run_cli(["fly"]) == 2
    assert run_cli(["ldp-sweep"]) == 2


def test_missing_epsilons_is_a_config_error(write_config, capsys):
    path = write_config(drop=("epsilons",))
    assert run("ldp-sweep", "--config", path) == 2
    assert "experiment.epsilons" in capsys.readouterr().err


def test_missing_config_file_is_a_config_error(tmp_path):
    path = os.path.join(str(tmp_path), "nothing.json")
    assert run("ldp-sweep", "--config", path) == 2


def test_sweep_writes_outputs_and_a_manifest(write_config, tmp_path):
    path = write_config()
    assert run("ldp-sweep", "--config", path) == 0

    results = os.path.join(str(tmp_path), "results")
    for name in ("tail.csv", "tail.json", "manifest.json",
                 os.path.join("logs", "run_logs.txt"),
                 os.path.join("logs", "settings.json")):
        assert os.path.isfile(os.path.join(results, name))

    manifest = read_json(os.path.join(results, "manifest.json"))
    assert manifest["command"] == "tail-sweep"
    assert set(manifest["digests"]) == {"tail.csv", "tail.json"}
    assert manifest["config"]["experiment"]["epsilons"] == [0.4, 0.2, 0.1]
    assert "Philox" in manifest["seed_rule"]


def test_manifest_rerun_is_bit_identical(write_config, tmp_path,
                                         monkeypatch):
    monkeypatch.setenv("PHI4_THREADS", "1")
    assert run("ldp-sweep", "--config", write_config()) == 0
    first = os.path.join(str(tmp_path), "results", "manifest.json")

    monkeypatch.setenv("PHI4_THREADS", "3")
    rerun = os.path.join(str(tmp_path), "rerun")
    assert run("ldp-sweep", "--manifest", first, "--output", rerun) == 0

    original = read_json(first)["digests"]
    repeated = read_json(os.path.join(rerun, "manifest.json"))["digests"]
    assert original == repeated


def test_report_draws_plots(write_config, tmp_path):
    assert run("ldp-sweep", "--config", write_config()) == 0
    results = os.path.join(str(tmp_path), "results")

    assert run("report", "--input", results) == 0
    assert os.path.isfile(os.path.join(results, "plots", "tail.svg"))
    assert os.path.isfile(os.path.join(results, "summary.csv"))


def test_report_on_empty_directory_fails(tmp_path):
    assert run("report", "--input", str(tmp_path)) == 3
    assert run("report", "--input",
               os.path.join(str(tmp_path), "missing")) == 2


def test_besov_command(write_config, tmp_path):
    assert run("besov", "--config", write_config()) == 0
    summary = read_json(os.path.join(str(tmp_path), "results", "besov.json"))
    for row in summary["sizes"].values():
        assert row["unity_error"] < 1e-10


def test_simulate_then_rate(write_config, tmp_path):
    assert run("simulate", "--config", write_config()) == 0
    trajectory = os.path.join(str(tmp_path), "results", "trajectory.csv")
    assert os.path.isfile(trajectory)

    path = write_config(experiment={"trajectory": trajectory})
    assert run("rate", "--config", path) == 0

    summary = read_json(os.path.join(str(tmp_path), "results", "rate.json"))
    assert summary["admissible"]
    assert summary["rate"] >= summary["endpoint_rate"]


def test_mode_ldp_command(write_config, tmp_path):
    path = write_config(experiment={"epsilons": [0.2, 0.1, 0.05]})
    assert run("mode-ldp", "--config", path) == 0
    assert os.path.isfile(os.path.join(str(tmp_path), "results",
                                       "mode_ldp.csv"))


def test_blow_up_is_an_experiment_failure(write_config, capsys):
    path = write_config(experiment={"amplitude": 1e7})
    assert run("ldp-sweep", "--config", path) == 3
    assert "blew up" in capsys.readouterr().err


@pytest.mark.slow
def test_scaling_check_command(write_config, tmp_path):
    path = write_config(solver={"n_modes": 8, "horizon": 1.0, "steps": 20},
                        experiment={"epsilons": [0.25], "replicas": 10_000,
                                    "chunk": 1000})
    assert run("scaling-check", "--config", path) == 0

    summary = read_json(os.path.join(str(tmp_path), "results",
                                     "scaling.json"))
    assert summary["passed"]
    assert summary["control_rejected"]
