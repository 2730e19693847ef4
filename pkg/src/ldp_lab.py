"""Phi4LDP - LDP lab module

This module performs several tasks, which may all
be called from the `ldp_lab` function:
- Simulate and dump single trajectories.
- Estimate eps*log P(sup_t ||u_eps - Z_eps|| > delta) over an eps sweep,
  and the same for the linear solution against its Brownian companion.
- Check the mode-level LDP against the closed-form Gaussian tail.
- Fit the eps-scaling of the stochastic convolution and of the shifted
  solution, including the stationary-start control.
- Run the scaling-law, Besov and rate-function verifications.
- Write CSV/JSON outputs, run logs and the run manifest.
"""

# Path setup
import os
import sys

root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
src = os.path.join(root, "src")
if root not in sys.path: sys.path.append(root)
if src not in sys.path: sys.path.append(src)

# File-specific imports
import math                                                     # noqa: E402
import time                                                     # noqa: E402
import warnings                                                 # noqa: E402
from dataclasses import dataclass, asdict, replace              # noqa: E402
from typing import Callable, Optional                           # noqa: E402
import numpy as np                                              # noqa: E402
import scipy.stats                                              # noqa: E402
from tqdm import tqdm                                           # noqa: E402
from util.general import log_dict, append_logs, file_digest     # noqa: E402
from util.style import (                                        # noqa: E402
    BAR_FORMAT, print_header, print_result, print_verdict
)
from util.tables import write_csv                               # noqa: E402
from initialization import ExperimentConfig                     # noqa: E402
from phi4 import __version__                                    # noqa: E402
from phi4.spectral_core import (                                # noqa: E402
    SpectralField, TorusGrid, Trajectory, to_physical
)
from phi4.besov_calculus import (                               # noqa: E402
    DyadicPartition, build_partition, hoelder_norm, verify_embedding,
    verify_schauder
)
from phi4.noise_process import (                                # noqa: E402
    NoiseStream, brownian_path, stationary_field, stochastic_convolution
)
from phi4.sde_solvers import (                                  # noqa: E402
    InitialData, decompose, energy_ratio, initial_data, read_trajectory_csv,
    scaling_law_check, solve_linear, solve_phi4_direct, solve_phi4_scaled,
    write_trajectory_csv
)
from phi4.rate_function import (                                # noqa: E402
    endpoint_rate, modulus_sweep, rate_functional, sample_level_set
)
from phi4.estimators import (                                   # noqa: E402
    MOMENT_COLUMNS, TAIL_COLUMNS, TailEstimate, chebyshev_proxy, check_span,
    fit_loglog, moment_profile, monotone_within_ci
)
from phi4.replicas import run_chunked                           # noqa: E402

SEED_RULE = ("Normal (replica r, step s, mode k, part c) is ndtri of Philox "
             "word 2(k-1)+c of replica block r under key (seed, s), uniform "
             "= ((word >> 11) + 0.5) / 2^53. Initial data use step key 2^63. "
             "Every eps of a sweep reuses the same seed.")

MODE_LDP_COLUMNS = ["epsilon", "rho", "hits", "replicas", "p_hat", "ci_low",
                    "ci_high", "p_exact", "eps_log_p_exact", "eps_log_p_mc",
                    "prediction", "within_ci"]
SHIFTED_COLUMNS = ["epsilon", "mean_sup_l2", "stderr", "max_energy_ratio",
                   "aborted"]
SCALING_COLUMNS = ["time", "k", "part", "p_value", "control_p_value"]

# Replicas used for the time-slice sensitivity report
SLICE_CHECK_REPLICAS = 200


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to rerun an experiment bit-exactly."""

    command: str
    config: dict
    version: str
    seed_rule: str
    wall_clock: float
    aborts: dict
    digests: dict
    manifest_version: int = 1

    def write(self, path: str):
        log_dict(asdict(self), path)


def _jsonable(obj):
    """Converts numpy containers and scalars for json.dump."""
    if isinstance(obj, dict):
        return {str(key): _jsonable(value) for key, value in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [_jsonable(value) for value in obj]
    elif isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    elif isinstance(obj, np.bool_):
        return bool(obj)
    elif isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, np.floating):
        return float(obj)
    elif hasattr(obj, "as_dict"):
        return _jsonable(obj.as_dict())
    return obj


def _concat(results: list) -> dict:
    return {key: np.concatenate([r[key] for r in results])
            for key in results[0]}


def _initial(config: ExperimentConfig, stream: NoiseStream) -> InitialData:
    """Initial data of a replica block. Rough data is shared by all replicas."""
    source = NoiseStream(config.seed) if config.initial_data == "rough" \
        else stream
    return initial_data(config.initial_data, config.grid, config.amplitude,
                        config.beta, source)


def sup_norms(traj: Trajectory, P: DyadicPartition, alpha: float) -> dict:
    """
    Discrete sup over the stored slices of the C^{-1/2-alpha}, L2 and Linf
    norms, per replica. Aborted replicas report +inf.
    """
    shape = traj.batch_shape
    besov, l2, linf = np.zeros(shape), np.zeros(shape), np.zeros(shape)

    for i in range(traj.n_times):
        f = traj.state(i)
        besov = np.maximum(besov, hoelder_norm(f, -0.5 - alpha, P))
        l2 = np.maximum(l2, f.l2_norm())
        linf = np.maximum(linf, np.max(np.abs(
            to_physical(f, n_phys=P.n_quad)), axis=-1))

    aborted = np.zeros(shape, dtype=bool) if traj.aborted is None \
        else np.asarray(traj.aborted, dtype=bool)
    aborted = aborted | np.isnan(besov)

    stats = {"sup_besov": besov, "sup_l2": l2, "sup_linf": linf}
    for value in stats.values():
        value[aborted] = np.inf
    stats["aborted"] = aborted

    return stats


def _sup_linf(traj: Trajectory, n_phys: int) -> np.ndarray:
    sup = np.zeros(traj.batch_shape)
    for i in range(traj.n_times):
        samples = to_physical(traj.state(i), n_phys=n_phys)
        sup = np.maximum(sup, np.max(np.abs(samples), axis=-1))
    return sup


def shifted_statistics(config: ExperimentConfig, epsilon: float,
                       P: Optional[DyadicPartition] = None,
                       workers: Optional[int] = None) -> dict:
    """Sup norms of v_eps = u_eps - Z_eps for all replicas at one eps."""
    P = P or build_partition(config.grid)
    cfg = config.solver.with_epsilon(epsilon)

    def task(start: int, count: int) -> dict:
        stream = NoiseStream(config.seed, start, count)
        Z, v = decompose(_initial(config, stream), cfg, stream)
        stats = sup_norms(v, P, config.alpha)
        stats["energy_ratio"] = energy_ratio(v, Z, cfg)
        stats["stability"] = np.full(count, v.stability)
        return stats

    return _concat(run_chunked(task, config.replicas, config.chunk, workers))


def linear_statistics(config: ExperimentConfig, epsilon: float,
                      P: Optional[DyadicPartition] = None,
                      workers: Optional[int] = None) -> dict:
    """Sup norms of Z_eps - x_eps, x_eps(t) = u0 + sqrt(eps) W(t)."""
    P = P or build_partition(config.grid)
    cfg = config.solver.with_epsilon(epsilon)

    def task(start: int, count: int) -> dict:
        stream = NoiseStream(config.seed, start, count)
        u0 = _initial(config, stream)
        Z = solve_linear(u0, cfg, stream)
        x = brownian_path(stream, epsilon, cfg.horizon, cfg.steps,
                          config.grid, z0=u0.u0)
        return sup_norms(Z - x, P, config.alpha)

    return _concat(run_chunked(task, config.replicas, config.chunk, workers))


def _observable(config: ExperimentConfig, stats: dict) -> np.ndarray:
    return stats["sup_besov"] if config.norm == "besov" else stats["sup_l2"]


def _tail_sweep(config: ExperimentConfig, statistics: Callable,
                predicate: Optional[Callable] = None,
                workers: Optional[int] = None,
                verbose: bool = False) -> tuple[list, list]:
    """Runs the eps sweep; returns the estimates and per-eps diagnostics."""
    P = build_partition(config.grid)
    delta = config.delta
    ids = np.arange(config.replicas)

    estimates, diagnostics = [], []
    epsilons = tqdm(config.epsilons, desc="eps sweep", ascii=True,
                    bar_format=BAR_FORMAT) if verbose else config.epsilons

    for epsilon in epsilons:
        stats = statistics(config, epsilon, P, workers)
        aborted = stats["aborted"]

        if np.all(aborted):
            raise UserWarning(f"All {config.replicas} replicas blew up at "
                              f"eps = {epsilon}. Decrease the time step.")

        observable = _observable(config, stats)
        finite = observable[np.isfinite(observable)]

        # First sweep point fixes delta when it is left to the data
        if delta is None:
            delta = float(np.median(observable))
            if not delta > 0:
                raise UserWarning("Median sup norm is zero; choose delta.")

        if predicate is None:
            hits = observable > delta
        else:
            hits = np.asarray(predicate(stats, ids), dtype=bool)

        estimates.append(TailEstimate.from_counts(
            epsilon, delta, int(np.sum(hits)), config.replicas,
            config.confidence
        ))
        diagnostics.append({
            "epsilon": epsilon,
            "aborted": int(np.sum(aborted)),
            "stability": float(np.max(stats.get("stability", [0.0]))),
            "mean_sup": float(np.mean(finite)),
            "median_sup": float(np.median(finite)),
            "chebyshev_proxy": chebyshev_proxy(finite, delta, epsilon),
            "q": 1.0 / epsilon,
        })

    censored = [e.epsilon for e in estimates if e.censored]
    if censored:
        warnings.warn(f"\nNo exceedances at eps = {censored}. Reporting the "
                      "rule-of-three bound for these rows.")

    return estimates, diagnostics


def estimate_tail(config: ExperimentConfig,
                  predicate: Optional[Callable] = None,
                  workers: Optional[int] = None,
                  verbose: bool = False) -> list:
    """
    eps*log P(sup_t ||u_eps - Z_eps||_{-1/2-alpha} > delta) for every eps
    of the sweep. `predicate(stats, replica_ids)` replaces the exceedance
    event (stats holds sup_besov, sup_l2, sup_linf and aborted per replica).
    Blown-up replicas count as exceedances.
    """
    return _tail_sweep(config, shifted_statistics, predicate, workers,
                       verbose)[0]


def estimate_linear_tail(config: ExperimentConfig,
                         predicate: Optional[Callable] = None,
                         workers: Optional[int] = None,
                         verbose: bool = False) -> list:
    """eps*log P(sup_t ||Z_eps - x_eps||_{-1/2-alpha} > delta) per eps."""
    return _tail_sweep(config, linear_statistics, predicate, workers,
                       verbose)[0]


def slice_sensitivity(config: ExperimentConfig, epsilon: float,
                      replicas: int = SLICE_CHECK_REPLICAS) -> float:
    """
    Relative change of the mean sup norm of v_eps when the stored time
    slices are doubled on the same Brownian path.
    """
    count = min(replicas, config.replicas)
    P = build_partition(config.grid)
    coarse_cfg = config.solver.with_epsilon(epsilon)
    fine_cfg = replace(coarse_cfg, steps=2 * coarse_cfg.steps)

    fine_stream = NoiseStream(config.seed, 0, count)
    u0 = _initial(config, fine_stream)

    means = []
    for cfg, stream in ((coarse_cfg, fine_stream.refined(2)),
                        (fine_cfg, fine_stream)):
        _, v = decompose(u0, cfg, stream)
        observable = _observable(config, sup_norms(v, P, config.alpha))
        means.append(float(np.mean(observable[np.isfinite(observable)])))

    coarse, fine = means
    return abs(fine - coarse) / fine if fine > 0 else 0.0


def mode_ldp_check(rho: float, T: float, epsilons, k: int = 1,
                   replicas: int = 10_000, seed: int = 0,
                   chunk: int = 100_000, confidence: float = 0.95,
                   workers: Optional[int] = None) -> dict:
    """
    eps*log P(|<x_eps(T) - z0, cos(pi k .)>| > rho) by Monte Carlo and in
    closed form 2 Q(rho / sqrt(eps T)), against the rate prediction
    -rho^2 / (2T).
    """
    if rho < 0:
        raise ValueError(f"Mode LDP check needs rho >= 0, got {rho}.")
    if k < 1:
        raise ValueError(f"Mode LDP check needs a mode k >= 1, got {k}.")
    if T <= 0:
        raise ValueError(f"Mode LDP check needs T > 0, got {T}.")

    grid = TorusGrid(k)
    z0 = SpectralField.zeros(grid)
    amplitudes = np.zeros(k)
    amplitudes[k - 1] = rho
    target = SpectralField.from_amplitudes(grid, amplitudes, np.zeros(k))
    prediction = -endpoint_rate(z0, target, T)

    rows = []
    for epsilon in epsilons:

        def task(start: int, count: int) -> np.ndarray:
            x = brownian_path(NoiseStream(seed, start, count), epsilon, T, 1,
                              grid)
            cos_amp, _ = x.state(1).amplitudes()
            return np.abs(cos_amp[:, k - 1]) > rho

        hits = np.concatenate(run_chunked(task, replicas, chunk, workers))
        mc = TailEstimate.from_counts(epsilon, rho, int(np.sum(hits)),
                                      replicas, confidence)

        if rho == 0:
            log_p = 0.0
        else:
            log_p = math.log(2.0) + \
                scipy.stats.norm.logsf(rho / math.sqrt(epsilon * T))
        p_exact = math.exp(log_p)

        rows.append({
            "epsilon": epsilon,
            "rho": rho,
            "hits": mc.hits,
            "replicas": mc.replicas,
            "p_hat": mc.p_hat,
            "ci_low": mc.ci_low,
            "ci_high": mc.ci_high,
            "p_exact": p_exact,
            "eps_log_p_exact": epsilon * log_p,
            "eps_log_p_mc": mc.eps_log_p,
            "prediction": prediction,
            "within_ci": mc.ci_low <= p_exact <= mc.ci_high,
        })

    return {"rho": rho, "T": T, "k": k, "prediction": prediction,
            "rows": rows}


def moment_scaling_fit(config: ExperimentConfig, epsilons=None,
                       replicas: Optional[int] = None, ps=None,
                       stationary_control: bool = True,
                       workers: Optional[int] = None,
                       verbose: bool = False) -> dict:
    """
    Fits log E sup_t ||Zbar_eps||_Linf against log eps, tabulates
    (E X^p)^{1/p} of that sup and measures the p-growth of the centred
    cos amplitude of mode 1 at time T. The control fits ||Z_eps(T)||_Linf
    for Z_eps started from the stationary law, whose law does not move
    with eps.
    """
    epsilons = tuple(epsilons or config.epsilons)
    replicas = replicas or config.replicas
    ps = tuple(ps or config.p_list)
    check_span(epsilons)

    grid = config.grid
    n_quad = build_partition(grid).n_quad

    def sample(epsilon: float, stationary: bool):
        cfg = config.solver.with_epsilon(epsilon)

        def task(start: int, count: int):
            stream = NoiseStream(config.seed, start, count)
            if stationary:
                Z = solve_linear(stationary_field(stream, grid), cfg, stream)
                terminal = to_physical(Z.state(-1), n_phys=n_quad)
                return {"sup": np.max(np.abs(terminal), axis=-1)}

            Z = stochastic_convolution(stream, epsilon, cfg.horizon,
                                       cfg.steps, grid, cfg.drift_factor)
            cos_amp, _ = Z.state(-1).amplitudes()
            return {"sup": _sup_linf(Z, n_quad), "mode": cos_amp[:, 0]}

        return _concat(run_chunked(task, replicas, config.chunk, workers))

    iterator = tqdm(epsilons, desc="Moment fit", ascii=True,
                    bar_format=BAR_FORMAT) if verbose else epsilons

    samples, rows, growth = [], [], []
    for epsilon in iterator:
        stats = sample(epsilon, stationary=False)
        sup = stats["sup"]
        samples.append(sup)

        rows.append({"epsilon": epsilon, "p": 1.0,
                     "moment": float(np.mean(sup)),
                     "stderr": float(np.std(sup, ddof=1) /
                                     math.sqrt(len(sup)))})
        moments, errors = moment_profile(sup, ps)
        for p, m, se in zip(ps, moments, errors):
            rows.append({"epsilon": epsilon, "p": p, "moment": m,
                         "stderr": se})

        mode_moments, _ = moment_profile(stats["mode"], ps)
        normalised = mode_moments / np.sqrt(ps)
        growth.append({"epsilon": epsilon,
                       "normalised": normalised.tolist(),
                       "spread": float(np.max(normalised) /
                                       np.min(normalised))})

    fit = fit_loglog(epsilons, samples, seed=config.seed)

    control = None
    if stationary_control:
        control_samples = [sample(epsilon, stationary=True)["sup"]
                           for epsilon in epsilons]
        control = fit_loglog(epsilons, control_samples, seed=config.seed)

    return {"fit": fit, "rows": rows, "growth": growth, "control": control,
            "ps": list(ps)}


def shifted_magnitude_fit(config: ExperimentConfig, epsilons=None,
                          replicas: Optional[int] = None,
                          u0_kind: Optional[str] = None,
                          workers: Optional[int] = None,
                          verbose: bool = False) -> dict:
    """
    Fits log E sup_t ||v_eps||_L2 against log eps and records the energy
    ratio sup_t ||v||_L6^6 / (eps int ||Z||_Linf^8) per eps.
    """
    config = replace(config,
                     epsilons=tuple(epsilons or config.epsilons),
                     replicas=replicas or config.replicas,
                     initial_data=u0_kind or config.initial_data)
    P = build_partition(config.grid)

    iterator = tqdm(config.epsilons, desc="Shifted fit", ascii=True,
                    bar_format=BAR_FORMAT) if verbose else config.epsilons

    samples, rows = [], []
    for epsilon in iterator:
        stats = shifted_statistics(config, epsilon, P, workers)
        aborted = stats["aborted"]
        if np.all(aborted):
            raise UserWarning(f"All replicas blew up at eps = {epsilon}.")

        sup = stats["sup_l2"][~aborted]
        ratio = stats["energy_ratio"][~aborted]
        samples.append(sup)
        rows.append({
            "epsilon": epsilon,
            "mean_sup_l2": float(np.mean(sup)),
            "stderr": float(np.std(sup, ddof=1) / math.sqrt(len(sup)))
            if len(sup) > 1 else 0.0,
            "max_energy_ratio": float(np.max(ratio)),
            "aborted": int(np.sum(aborted)),
        })

    fit = fit_loglog(config.epsilons, samples, seed=config.seed)

    if config.initial_data == "zero":
        predicted = 7.0 / 4.0
    elif config.initial_data == "rough":
        predicted = 1.0 - 1.5 * (config.beta + config.beta_prime)
    else:
        predicted = 1.0

    return {
        "u0": config.initial_data,
        "fit": fit,
        "rows": rows,
        "predicted_exponent": predicted,
        "energy_bound": max(row["max_energy_ratio"] for row in rows),
    }


def besov_verification(config: ExperimentConfig, n_fields: int = 100,
                       sizes=(32, 64, 128)) -> dict:
    """
    Partition-of-unity and support checks for several truncations, plus
    embedding and Schauder ratios on random fields.
    """
    report = {}
    for N in sorted({config.grid.n_modes, *sizes}):
        grid = TorusGrid(N)
        P = build_partition(grid)
        W = P.windows

        overlap = 0.0
        for a in range(len(W)):
            for b in range(a + 2, len(W)):
                overlap = max(overlap, float(np.max(W[a] * W[b])))

        fields = stationary_field(NoiseStream(config.seed, 0, n_fields), grid)
        embedding = verify_embedding(fields, 0.5, 2.0, 2.0, math.inf,
                                     math.inf, P)
        schauder = verify_schauder(fields, -0.6, 1.0, np.logspace(-4, 0, 9),
                                   P)

        report[N] = {
            "j_max": P.j_max,
            "unity_error": float(np.max(np.abs(W.sum(axis=0) - 1.0))),
            "support_overlap": overlap,
            "embedding_max_ratio": embedding["max_ratio"],
            "schauder_max_ratio": schauder["max_ratio"],
        }

    return report


def constant_spread(report: dict, key: str, sizes=(32, 64, 128)) -> float:
    """max / min of a verification constant over the listed truncations."""
    values = [report[N][key] for N in sizes if N in report]
    return max(values) / min(values)


def rate_evaluation(config: ExperimentConfig, n_paths: int = 32,
                    steps: int = 50) -> dict:
    """
    Discrete rate of a dumped trajectory plus the level-set modulus sweep
    over config.levels on random piecewise-linear paths.
    """
    g = read_trajectory_csv(config.trajectory)
    z0 = g.state(0)
    result = rate_functional(g, z0)

    sweep_z0 = SpectralField.zeros(config.grid)
    paths_by_level = {
        r: sample_level_set(sweep_z0, r, 1.0, steps,
                            NoiseStream(config.seed, 0, n_paths))
        for r in config.levels
    }
    sweep = modulus_sweep(paths_by_level, config.alpha)

    return {
        "trajectory": config.trajectory,
        "rate": result.value,
        "admissible": result.admissible,
        "endpoint_rate": endpoint_rate(z0, g.state(-1), g.horizon),
        "convention": "discrete infimum over paths through the samples",
        "modulus_by_level": sweep.modulus_report,
        "modulus_spread": sweep.value,
    }


def _register(paths: dict, name: str, path: str):
    paths["outputs"][name] = path


def _write_summary(paths: dict, name: str, summary: dict) -> dict:
    path = os.path.join(paths["outputDir"], name)
    log_dict(_jsonable(summary), path)
    _register(paths, name, path)
    return summary


def run_simulate(paths: dict, config: ExperimentConfig,
                 verbose: bool = True) -> tuple[dict, dict]:
    """Dumps one trajectory of u_eps at the first eps to trajectory.csv."""
    epsilon = config.epsilons[0]
    cfg = config.solver.with_epsilon(epsilon)
    stream = NoiseStream(config.seed)
    u0 = _initial(config, stream)

    if verbose: print(f"Simulating one trajectory (eps = {epsilon:g})...\t",
                      end="", flush=True)
    if cfg.scheme == "semi-implicit":
        traj = solve_phi4_direct(u0, cfg, stream)
    else:
        traj = solve_phi4_scaled(u0, cfg, stream)

    if traj.aborted is not None and traj.aborted[0]:
        if verbose: print_result(False)
        raise UserWarning(f"The trajectory blew up (eps = {epsilon}).")
    if verbose: print_result()

    path = os.path.join(paths["outputDir"], "trajectory.csv")
    write_trajectory_csv(traj.replica(0), path)
    _register(paths, "trajectory.csv", path)

    summary = {"epsilon": epsilon, "stability": traj.stability,
               "aborts": {str(epsilon): 0}}
    append_logs(f"simulate: eps = {epsilon}, "
                f"stability monitor = {traj.stability:.6g}",
                paths["runLogs"])

    return paths, summary


def _run_sweep(paths: dict, config: ExperimentConfig, statistics: Callable,
               table: str, verbose: bool) -> tuple[dict, dict]:
    estimates, diagnostics = _tail_sweep(config, statistics,
                                         verbose=verbose)

    path = os.path.join(paths["outputDir"], table)
    write_csv(path, TAIL_COLUMNS, [e.as_row() for e in estimates])
    _register(paths, table, path)

    non_censored = [e.censored for e in estimates[:-1]]
    summary = {
        "delta": estimates[0].delta,
        "monotone_within_ci": monotone_within_ci(estimates),
        "censored_before_last": any(non_censored),
        "diagnostics": diagnostics,
        "aborts": {str(d["epsilon"]): d["aborted"] for d in diagnostics},
    }
    if statistics is shifted_statistics:
        summary["slice_sensitivity"] = slice_sensitivity(
            config, config.epsilons[0])

    if verbose:
        for e in estimates:
            print(f"eps = {e.epsilon:<8g} hits = {e.hits:<8d} "
                  f"eps log p = {e.eps_log_p:.4f}"
                  f"{'  (censored)' if e.censored else ''}")
        print_verdict("eps log p non-increasing (within CI)",
                      summary["monotone_within_ci"])

    append_logs("\n".join(f"{table}: eps = {d['epsilon']}, aborted = "
                          f"{d['aborted']}, stability = {d['stability']:.4g}"
                          for d in diagnostics), paths["runLogs"])

    return paths, _write_summary(paths, table.replace(".csv", ".json"),
                                 summary)


def run_tail_sweep(paths: dict, config: ExperimentConfig,
                   verbose: bool = True) -> tuple[dict, dict]:
    return _run_sweep(paths, config, shifted_statistics, "tail.csv", verbose)


def run_linear_sweep(paths: dict, config: ExperimentConfig,
                     verbose: bool = True) -> tuple[dict, dict]:
    return _run_sweep(paths, config, linear_statistics, "linear_tail.csv",
                      verbose)


def run_mode_ldp(paths: dict, config: ExperimentConfig,
                 verbose: bool = True) -> tuple[dict, dict]:
    report = mode_ldp_check(config.rho, config.solver.horizon,
                            config.epsilons, config.mode, config.replicas,
                            config.seed, max(config.chunk, 10_000),
                            config.confidence)

    path = os.path.join(paths["outputDir"], "mode_ldp.csv")
    write_csv(path, MODE_LDP_COLUMNS, report["rows"])
    _register(paths, "mode_ldp.csv", path)

    if verbose:
        for row in report["rows"]:
            print_verdict(f"eps = {row['epsilon']:g}: MC vs closed form",
                          row["within_ci"],
                          f"eps log P = {row['eps_log_p_exact']:.4f} "
                          f"(rate {report['prediction']:.4f})")

    append_logs(f"mode-ldp: rho = {config.rho}, k = {config.mode}, "
                f"prediction = {report['prediction']:.6g}", paths["runLogs"])

    summary = {key: report[key] for key in ("rho", "T", "k", "prediction")}
    summary["aborts"] = {}
    return paths, _write_summary(paths, "mode_ldp.json", summary)


def run_moment_fit(paths: dict, config: ExperimentConfig,
                   verbose: bool = True) -> tuple[dict, dict]:
    report = moment_scaling_fit(config, stationary_control=True,
                                verbose=verbose)

    path = os.path.join(paths["outputDir"], "moments.csv")
    write_csv(path, MOMENT_COLUMNS, report["rows"])
    _register(paths, "moments.csv", path)

    fit, control = report["fit"], report["control"]
    if verbose:
        print_verdict("slope of log E sup ||Zbar||_Linf in [0.15, 0.3]",
                      0.15 <= fit.slope <= 0.3,
                      f"slope = {fit.slope:.4f} +- {fit.stderr:.4f}")
        print_verdict("stationary control slope in [-0.05, 0.05]",
                      abs(control.slope) <= 0.05,
                      f"slope = {control.slope:.4f}")

    append_logs(f"moment-fit: slope = {fit.slope:.6g} (se {fit.stderr:.3g}), "
                f"control slope = {control.slope:.6g}", paths["runLogs"])

    summary = {"fit": fit, "control": control, "growth": report["growth"],
               "aborts": {}}
    return paths, _write_summary(paths, "moments.json", summary)


def run_shifted_fit(paths: dict, config: ExperimentConfig,
                    verbose: bool = True) -> tuple[dict, dict]:
    report = shifted_magnitude_fit(config, verbose=verbose)

    path = os.path.join(paths["outputDir"], "shifted.csv")
    write_csv(path, SHIFTED_COLUMNS, report["rows"])
    _register(paths, "shifted.csv", path)

    fit = report["fit"]
    if verbose:
        print_verdict("slope of log E sup ||v||_L2",
                      fit.slope >= 0.9 * report["predicted_exponent"],
                      f"slope = {fit.slope:.4f} (predicted "
                      f"{report['predicted_exponent']:.3f})")

    append_logs(f"shifted-fit: u0 = {report['u0']}, slope = {fit.slope:.6g}, "
                f"energy bound = {report['energy_bound']:.6g}",
                paths["runLogs"])

    summary = {key: report[key] for key in
               ("u0", "fit", "predicted_exponent", "energy_bound")}
    summary["aborts"] = {str(r["epsilon"]): r["aborted"]
                         for r in report["rows"]}
    return paths, _write_summary(paths, "shifted.json", summary)


def run_scaling_check(paths: dict, config: ExperimentConfig,
                      verbose: bool = True) -> tuple[dict, dict]:
    epsilon = config.epsilons[0]
    u0 = _initial(config, NoiseStream(config.seed)).u0
    if u0.batch_shape != ():
        raise ValueError("The scaling check needs deterministic initial "
                         "data (zero, smooth or rough).")

    args = (u0, epsilon, config.solver.horizon, config.solver.steps,
            config.replicas)
    kwargs = {"seed": config.seed, "chunk": config.chunk, "verbose": verbose}

    report = scaling_law_check(*args, **kwargs)
    control = scaling_law_check(*args, drift_factor=2.0, **kwargs) \
        if config.negative_control else None

    rows = []
    for i, t in enumerate(report["times"]):
        for m, k in enumerate(report["modes"]):
            for part, name in enumerate(("re", "im")):
                rows.append({
                    "time": t, "k": k, "part": name,
                    "p_value": report["p_values"][i, m, part],
                    "control_p_value": control["p_values"][i, m, part]
                    if control else float("nan"),
                })

    path = os.path.join(paths["outputDir"], "scaling.csv")
    write_csv(path, SCALING_COLUMNS, rows)
    _register(paths, "scaling.csv", path)

    summary = {"epsilon": epsilon, "pass_rate": report["pass_rate"],
               "passed": report["passed"], "aborts": {}}
    if control:
        summary["control_pass_rate"] = control["pass_rate"]
        summary["control_rejected"] = not control["passed"]

    if verbose:
        print_verdict("u(eps t) ~ u_eps(t) per mode (KS)", report["passed"],
                      f"pass rate = {report['pass_rate']:.3f}")
        if control:
            print_verdict("doubled drift rejected",
                          summary["control_rejected"],
                          f"pass rate = {control['pass_rate']:.3f}")

    append_logs(f"scaling-check: eps = {epsilon}, pass rate = "
                f"{report['pass_rate']:.4f}", paths["runLogs"])

    return paths, _write_summary(paths, "scaling.json", summary)


def run_besov_verify(paths: dict, config: ExperimentConfig,
                     verbose: bool = True) -> tuple[dict, dict]:
    report = besov_verification(config)

    if verbose:
        for N, row in report.items():
            print_verdict(f"N = {N}: partition of unity",
                          row["unity_error"] < 1e-10 and
                          row["support_overlap"] == 0.0,
                          f"error = {row['unity_error']:.2e}")
        for key in ("embedding_max_ratio", "schauder_max_ratio"):
            spread = constant_spread(report, key)
            print_verdict(f"{key} stable across N (factor 2)", spread < 2.0,
                          f"spread = {spread:.3f}")

    append_logs("besov: " + ", ".join(
        f"N = {N} error = {row['unity_error']:.3g}"
        for N, row in report.items()), paths["runLogs"])

    summary = {"sizes": report, "aborts": {}}
    return paths, _write_summary(paths, "besov.json", summary)


def run_rate_eval(paths: dict, config: ExperimentConfig,
                  verbose: bool = True) -> tuple[dict, dict]:
    report = rate_evaluation(config)

    if verbose:
        print(f"I(g) = {report['rate']:.6g} "
              f"({report['convention']}), endpoint rate = "
              f"{report['endpoint_rate']:.6g}")
        print_verdict("modulus bounded across levels (factor 2)",
                      report["modulus_spread"] <= 2.0,
                      f"spread = {report['modulus_spread']:.3f}")

    append_logs(f"rate-eval: {report['trajectory']}, I = "
                f"{report['rate']:.6g}", paths["runLogs"])

    report["aborts"] = {}
    return paths, _write_summary(paths, "rate.json", report)


STAGES = {
    "simulate": run_simulate,
    "tail-sweep": run_tail_sweep,
    "linear-sweep": run_linear_sweep,
    "mode-ldp": run_mode_ldp,
    "moment-scaling": run_moment_fit,
    "shifted-fit": run_shifted_fit,
    "scaling-check": run_scaling_check,
    "besov-verify": run_besov_verify,
    "rate-eval": run_rate_eval,
}


def write_manifest(paths: dict, config: ExperimentConfig, summary: dict,
                   wall_clock: float) -> RunManifest:
    """Pins config, seed rule and output digests of a finished run."""
    digests = {name: file_digest(path)
               for name, path in sorted(paths["outputs"].items())}

    manifest = RunManifest(command=config.kind, config=config.to_dict(),
                           version=__version__, seed_rule=SEED_RULE,
                           wall_clock=wall_clock,
                           aborts=summary.get("aborts", {}),
                           digests=digests)
    manifest.write(paths["manifest"])
    log_dict(asdict(manifest), os.path.join(paths["logsDir"],
                                            "manifest.json"))
    return manifest


def ldp_lab(paths: dict, config: ExperimentConfig,
            verbose: bool = True) -> tuple[dict, dict]:
    """
    This is the main wrapper function for the lab module.
    It runs the experiment named by `config.kind` and writes the manifest.
    """

    if config.kind not in STAGES:
        raise ValueError(f"Unknown experiment kind '{config.kind}'.")

    if verbose: print_header(f"\n==== MODULE 1 - {config.kind.upper()} ====")

    started = time.perf_counter()
    paths, summary = STAGES[config.kind](paths, config, verbose)
    wall_clock = time.perf_counter() - started

    write_manifest(paths, config, summary, wall_clock)
    append_logs(f"{config.kind} finished in {wall_clock:.2f} s; "
                f"outputs: {', '.join(paths['outputs'])}", paths["runLogs"])

    if verbose: print_header(f"\n{config.kind.upper()} FINISHED")

    return paths, summary


if __name__ == "__main__":
    from initialization import initialization      # noqa: E402
    ldp_lab(*initialization())
