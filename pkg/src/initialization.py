"""Phi4LDP - Initialization module

This module performs several tasks, which may all
be called from the `initialization` function:
- Extract the experiment configuration from a `config.json` file
  (or from the config snapshot stored in a run manifest).
- Fill in defaults for missing optional fields and validate the rest.
- Setup the paths dictionary and create the output directories.
- Log paths and settings to the logs directory.
"""

# Path setup
import os
import sys

root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
src = os.path.join(root, "src")
if root not in sys.path: sys.path.append(root)
if src not in sys.path: sys.path.append(src)

# File-specific imports
import warnings                                                 # noqa: E402
from dataclasses import dataclass, asdict, replace              # noqa: E402
from typing import Optional                                     # noqa: E402
from util.general import extract_json, log_dict, check_type     # noqa: E402
from util.style import print_result, print_header               # noqa: E402
from util.checks import (                                       # noqa: E402
    check_decreasing, check_integer, check_keys, check_positive
)
from phi4.spectral_core import TorusGrid                        # noqa: E402
from phi4.sde_solvers import (                                  # noqa: E402
    INITIAL_DATA_KINDS, SCHEMES, SolverConfig
)

EXPERIMENT_KINDS = ("simulate", "tail-sweep", "moment-scaling", "mode-ldp",
                    "scaling-check", "besov-verify", "rate-eval",
                    "shifted-fit", "linear-sweep")

# Kinds that sweep over eps and therefore need an explicit list
SWEEP_KINDS = ("tail-sweep", "moment-scaling", "mode-ldp", "shifted-fit",
               "linear-sweep")

SOLVER_DEFAULTS = {
    "n_modes": 64,
    "n_phys": 0,
    "horizon": 1.0,
    "steps": 200,
    "scheme": "exponential-euler",
    "dealias": 1,
    "drift_factor": 1.0,
    "mean_zero": 1,
}

EXPERIMENT_DEFAULTS = {
    "kind": "tail-sweep",
    "epsilons": [0.4, 0.2, 0.1, 0.05, 0.025],
    "delta": 0.01,
    "alpha": 0.05,
    "beta": 0.1,
    "beta_prime": 0.0,
    "initial_data": "smooth",
    "amplitude": 0.5,
    "replicas": 1000,
    "seed": 0,
    "chunk": 250,
    "confidence": 0.95,
    "norm": "besov",
    "rho": 0.5,
    "mode": 1,
    "p_list": [2, 4, 8, 16],
    "levels": [0.5, 1, 2, 4],
    "negative_control": 1,
    "trajectory": "",
}

OUTPUT_DEFAULTS = {
    "directory": "results",
    "plots": 1,
}

NORMS = ("besov", "l2")


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Validated experiment settings. `delta` None means: the median of the
    observed sup norms at the largest eps. The solver config carries
    eps = 1 as a placeholder; experiments set eps per sweep point.
    """

    kind: str
    epsilons: tuple
    delta: Optional[float]
    alpha: float
    beta: float
    beta_prime: float
    initial_data: str
    amplitude: float
    replicas: int
    seed: int
    chunk: int
    confidence: float
    norm: str
    rho: float
    mode: int
    p_list: tuple
    levels: tuple
    negative_control: bool
    trajectory: str
    solver: SolverConfig
    output_dir: str
    plots: bool = True

    @property
    def grid(self) -> TorusGrid:
        return self.solver.grid

    def with_kind(self, kind: str) -> "ExperimentConfig":
        if kind not in EXPERIMENT_KINDS:
            raise ValueError(f"Unknown experiment kind '{kind}'.")
        return replace(self, kind=kind)

    def to_dict(self) -> dict:
        """Config snapshot in the `config.json` layout."""
        solver = {
            "n_modes": self.solver.grid.n_modes,
            "n_phys": self.solver.grid.n_phys,
            "horizon": self.solver.horizon,
            "steps": self.solver.steps,
            "scheme": self.solver.scheme,
            "dealias": int(self.solver.dealias),
            "drift_factor": self.solver.drift_factor,
            "mean_zero": int(self.solver.mean_zero),
        }

        experiment = {key: value for key, value in asdict(self).items()
                      if key in EXPERIMENT_DEFAULTS}
        experiment["epsilons"] = list(self.epsilons)
        experiment["delta"] = "median" if self.delta is None else self.delta
        experiment["p_list"] = list(self.p_list)
        experiment["levels"] = list(self.levels)
        experiment["negative_control"] = int(self.negative_control)

        output = {"directory": self.output_dir, "plots": int(self.plots)}

        return {"solver": solver, "experiment": experiment, "output": output}


def fill_defaults(section: str, data: dict, defaults: dict,
                  required: tuple = ()) -> dict:
    """
    This function fills in missing fields of a config section.
    Missing required fields raise a ValueError naming the field,
    other missing fields are taken from the defaults with a warning.
    """

    check_type(data, dict, f"section '{section}'")
    check_keys(section, data, defaults)

    settings = {key: value for key, value in data.items()
                if not key.startswith("_")}

    for key in required:
        if key not in settings:
            raise ValueError(f"Config field '{section}.{key}' is required "
                             "but was not defined.")

    missing = [key for key in defaults if key not in settings]
    for key in missing:
        settings[key] = defaults[key]

    if missing:
        used = ", ".join(f"{key}={defaults[key]}" for key in missing)
        warnings.warn(f"\nFields of section '{section}' not defined. "
                      f"Using {used}.")

    return settings


def extract_solver(data: dict) -> SolverConfig:
    """
    This function builds the solver config from the `solver` section.
    """

    s = fill_defaults("solver", data, SOLVER_DEFAULTS)

    check_integer("solver.n_modes", s["n_modes"], 1)
    check_integer("solver.n_phys", s["n_phys"], 0)
    check_positive("solver.horizon", s["horizon"])
    check_integer("solver.steps", s["steps"], 1)
    check_positive("solver.drift_factor", s["drift_factor"])
    if s["scheme"] not in SCHEMES:
        raise ValueError(f"Config field 'solver.scheme' should be one of "
                         f"{', '.join(SCHEMES)}, got {s['scheme']!r}.")

    grid = TorusGrid(s["n_modes"], s["n_phys"])

    return SolverConfig(1.0, float(s["horizon"]), s["steps"], grid,
                        scheme=s["scheme"], dealias=bool(s["dealias"]),
                        drift_factor=float(s["drift_factor"]),
                        mean_zero=bool(s["mean_zero"]))


def extract_experiment(data: dict, kind: Optional[str] = None) -> dict:
    """
    This function extracts and validates the `experiment` section.
    `kind` (e.g. from the command line) overrides the configured kind.
    """

    if kind is None:
        kind = data.get("kind", EXPERIMENT_DEFAULTS["kind"])
    if kind not in EXPERIMENT_KINDS:
        raise ValueError(f"Config field 'experiment.kind' should be one of "
                         f"{', '.join(EXPERIMENT_KINDS)}, got {kind!r}.")

    required = ("epsilons",) if kind in SWEEP_KINDS else ()
    e = fill_defaults("experiment", {**data, "kind": kind},
                      EXPERIMENT_DEFAULTS, required)

    check_decreasing("experiment.epsilons", e["epsilons"])
    check_positive("experiment.alpha", e["alpha"])
    check_positive("experiment.amplitude", e["amplitude"], strict=False)
    check_positive("experiment.rho", e["rho"], strict=False)
    check_integer("experiment.replicas", e["replicas"], 1)
    check_integer("experiment.seed", e["seed"], 0)
    check_integer("experiment.chunk", e["chunk"], 1)
    check_integer("experiment.mode", e["mode"], 1)

    if e["delta"] == "median":
        e["delta"] = None
    else:
        check_positive("experiment.delta", e["delta"])

    if not 0.0 < e["beta"] < 0.25:
        raise ValueError("Config field 'experiment.beta' should lie in "
                         f"(0, 1/4), got {e['beta']}.")
    if not 0.0 <= e["beta_prime"] < 0.25:
        raise ValueError("Config field 'experiment.beta_prime' should lie "
                         f"in [0, 1/4), got {e['beta_prime']}.")
    if not 0.0 < e["confidence"] < 1.0:
        raise ValueError("Config field 'experiment.confidence' should lie "
                         f"in (0, 1), got {e['confidence']}.")
    if e["initial_data"] not in INITIAL_DATA_KINDS:
        raise ValueError(f"Config field 'experiment.initial_data' should be "
                         f"one of {', '.join(INITIAL_DATA_KINDS)}.")
    if e["norm"] not in NORMS:
        raise ValueError(f"Config field 'experiment.norm' should be one of "
                         f"{', '.join(NORMS)}.")

    for name in ("p_list", "levels"):
        values = e[name]
        if not isinstance(values, list) or len(values) == 0:
            raise ValueError(f"Config field 'experiment.{name}' should be "
                             "a non-empty list.")
        for value in values:
            check_positive(f"experiment.{name}", value)

    if kind == "rate-eval" and not e["trajectory"]:
        raise ValueError("Config field 'experiment.trajectory' is required "
                         "for rate evaluation.")

    return e


def extract_settings(config_data: dict, kind: Optional[str] = None,
                     output: Optional[str] = None,
                     config_dir: str = ".") -> ExperimentConfig:
    """
    This function extracts the settings used for the experiment
    from the config data. Output is an `ExperimentConfig`.
    """

    check_keys("root", config_data, ("solver", "experiment", "output"))

    solver = extract_solver(config_data.get("solver", {}))
    e = extract_experiment(config_data.get("experiment", {}), kind)
    o = fill_defaults("output", config_data.get("output", {}),
                      OUTPUT_DEFAULTS)

    # Relative output directories live next to the config file
    output_dir = output if output is not None else o["directory"]
    if not os.path.isabs(output_dir):
        output_dir = os.path.join(config_dir, output_dir)

    trajectory = e["trajectory"]
    if trajectory and not os.path.isabs(trajectory):
        trajectory = os.path.join(config_dir, trajectory)

    return ExperimentConfig(
        kind=e["kind"],
        epsilons=tuple(float(eps) for eps in e["epsilons"]),
        delta=None if e["delta"] is None else float(e["delta"]),
        alpha=float(e["alpha"]),
        beta=float(e["beta"]),
        beta_prime=float(e["beta_prime"]),
        initial_data=e["initial_data"],
        amplitude=float(e["amplitude"]),
        replicas=e["replicas"],
        seed=e["seed"],
        chunk=e["chunk"],
        confidence=float(e["confidence"]),
        norm=e["norm"],
        rho=float(e["rho"]),
        mode=e["mode"],
        p_list=tuple(float(p) for p in e["p_list"]),
        levels=tuple(float(r) for r in e["levels"]),
        negative_control=bool(e["negative_control"]),
        trajectory=trajectory,
        solver=solver,
        output_dir=os.path.abspath(output_dir),
        plots=bool(o["plots"]),
    )


def setup_paths(config: ExperimentConfig, config_path: str) -> dict:
    """
    This function sets up all relevant paths for the experiment
    and creates the output, logs and plots directories.
    """

    paths = {"root": root,
             "configFile": os.path.abspath(config_path),
             "outputDir": config.output_dir}

    paths["logsDir"] = os.path.join(config.output_dir, "logs")
    paths["plotsDir"] = os.path.join(config.output_dir, "plots")
    paths["runLogs"] = os.path.join(paths["logsDir"], "run_logs.txt")
    paths["manifest"] = os.path.join(config.output_dir, "manifest.json")
    paths["outputs"] = {}

    for folder in ("outputDir", "logsDir", "plotsDir"):
        if not os.path.isdir(paths[folder]):
            os.makedirs(paths[folder])

    return paths


def load_config_data(config_path: str) -> tuple[dict, Optional[str]]:
    """
    Reads a config file or a run manifest. For manifests, the stored
    config snapshot and command are returned.
    """

    data = extract_json(config_path)

    if "manifest_version" in data:
        return data["config"], data.get("command")

    return data, None


def initialization(config_path: str = "config.json",
                   kind: Optional[str] = None, output: Optional[str] = None,
                   verbose: bool = True) -> tuple[dict, ExperimentConfig]:
    """
    This function is the main initialization function for the Phi4LDP lab.
    It takes the path of the config file (or a run manifest) as a parameter.
    """

    if verbose: print_header("\n==== MODULE 0 - INITIALIZATION ====\n")

    # Extract config data
    if verbose: print("Extracting config data...\t", end="", flush=True)
    config_data, stored_kind = load_config_data(config_path)
    if verbose: print_result()

    # Setup settings
    if verbose: print("Creating settings...\t\t", end="", flush=True)
    config_dir = os.path.dirname(os.path.abspath(config_path))
    config = extract_settings(config_data, kind or stored_kind, output,
                              config_dir)
    if verbose: print_result()

    # Setup paths
    if verbose: print("Setting up paths...\t\t", end="", flush=True)
    paths = setup_paths(config, config_path)
    if verbose: print_result()

    # Log paths and settings
    log_dict({key: value for key, value in paths.items()
              if key != "outputs"},
             os.path.join(paths["logsDir"], "paths.json"))
    log_dict(config.to_dict(), os.path.join(paths["logsDir"],
                                            "settings.json"))

    if verbose:
        grid = config.grid
        print(f"\nExperiment: {config.kind}  |  N = {grid.n_modes}, "
              f"M = {grid.n_phys}, steps = {config.solver.steps}, "
              f"replicas = {config.replicas}, "
              f"eps in [{min(config.epsilons):g}, "
              f"{max(config.epsilons):g}]")
        print_header("\nINITIALIZATION FINISHED")

    return paths, config


if __name__ == "__main__":
    initialization()
