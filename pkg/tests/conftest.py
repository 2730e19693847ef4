"""Shared fixtures for the Phi4LDP test-suite"""

# Path setup
import os
import sys

root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
src = os.path.join(root, "src")
if root not in sys.path: sys.path.append(root)
if src not in sys.path: sys.path.append(src)

import pytest                                       # noqa: E402
from initialization import extract_settings        # noqa: E402


def config_data(solver: dict = None, experiment: dict = None,
                output: dict = None) -> dict:
    """Small, fast config in the config.json layout."""
    data = {
        "solver": {"n_modes": 4, "horizon": 1.0, "steps": 10},
        "experiment": {"epsilons": [0.4, 0.2, 0.1], "replicas": 200,
                       "seed": 3, "chunk": 64, "delta": 0.01},
        "output": {"directory": "results"},
    }
    data["solver"].update(solver or {})
    data["experiment"].update(experiment or {})
    data["output"].update(output or {})
    return data


@pytest.fixture
def make_config(tmp_path):
    """Factory for ExperimentConfig objects writing into tmp_path."""

    def factory(kind: str = "tail-sweep", solver: dict = None,
                **experiment):
        data = config_data(solver, experiment)
        return extract_settings(data, kind, config_dir=str(tmp_path))

    return factory


@pytest.fixture
def write_config(tmp_path):
    """Factory writing a config.json into tmp_path; returns its path."""
    import json

    def factory(solver: dict = None, experiment: dict = None,
                drop: tuple = ()) -> str:
        data = config_data(solver, experiment)
        for key in drop:
            data["experiment"].pop(key)
        path = os.path.join(str(tmp_path), "config.json")
        with open(path, "w") as f:
            json.dump(data, f)
        return path

    return factory
