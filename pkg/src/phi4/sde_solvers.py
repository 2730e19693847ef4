"""SDE solvers: linear, shifted and full Phi^4_1 dynamics

The scaled equation du = eps Lap u dt - eps u^3 dt + sqrt(eps) dW is split
into the linear part Z (solved exactly mode by mode) and the shifted
equation dv = eps Lap v dt - eps (v + Z)^3 dt, v(0) = 0 (exponential Euler).
Cubic terms are formed on a zero-padded grid of at least 3N+1 nodes and
projected back onto |k| <= N; on the mean-zero flow the projection also
removes the mean of the cube.
"""

import math
from dataclasses import dataclass, replace
from typing import Optional, Union
import numpy as np
import scipy.stats
from scipy.integrate import trapezoid
from phi4.spectral_core import (
    SpectralField, TorusGrid, Trajectory, to_physical, to_spectral,
    uniform_times
)
from phi4.noise_process import (
    NoiseStream, complex_gaussian, stationary_field, stochastic_convolution
)
from phi4.replicas import run_chunked
from util.tables import read_columns, write_csv

SCHEMES = ("exponential-euler", "semi-implicit")
INITIAL_DATA_KINDS = ("zero", "smooth", "rough", "stationary")
BLOWUP_THRESHOLD = 1e6
TRAJECTORY_COLUMNS = ["time", "k", "re", "im"]


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float
    horizon: float
    steps: int
    grid: TorusGrid
    scheme: str = "exponential-euler"
    dealias: bool = True
    drift_factor: float = 1.0
    mean_zero: bool = True
    blowup: float = BLOWUP_THRESHOLD

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon should be >= 0, got {self.epsilon}.")
        if self.horizon <= 0:
            raise ValueError(f"horizon should be > 0, got {self.horizon}.")
        if self.steps < 1:
            raise ValueError(f"steps should be >= 1, got {self.steps}.")
        if self.scheme not in SCHEMES:
            raise ValueError(f"Unknown scheme '{self.scheme}'. "
                             f"Choose from {', '.join(SCHEMES)}.")
        if self.drift_factor <= 0:
            raise ValueError("drift_factor should be > 0.")

    @property
    def h(self) -> float:
        return self.horizon / self.steps

    @property
    def times(self) -> np.ndarray:
        return uniform_times(self.horizon, self.steps)

    @property
    def rate(self) -> float:
        """Effective drift scale eps * drift_factor."""
        return self.epsilon * self.drift_factor

    def with_epsilon(self, epsilon: float) -> "SolverConfig":
        return replace(self, epsilon=epsilon)


@dataclass(frozen=True)
class InitialData:
    """u0 together with the regularity beta it is declared to have (C^-beta)."""

    u0: SpectralField
    declared_regularity: float = 0.1
    kind: str = "custom"

    def __post_init__(self):
        if not 0.0 < self.declared_regularity < 0.25:
            raise ValueError("Initial data regularity beta should lie in "
                             f"(0, 1/4), got {self.declared_regularity}.")


def initial_data(kind: str, grid: TorusGrid, amplitude: float = 0.5,
                 beta: float = 0.1,
                 stream: Optional[NoiseStream] = None) -> InitialData:
    """
    Ships the initial data classes:
    - zero:       u0 = 0
    - smooth:     u0 = amplitude * (e_1 + e_-1)
    - rough:      c_k = amplitude * |k|^(beta - 1/2) * xi_k, one draw
    - stationary: one draw per replica of the stream from the invariant
                  law of the linear flow
    """
    if kind == "zero":
        u0 = SpectralField.zeros(grid)
    elif kind == "smooth":
        u0 = SpectralField.from_modes(grid, {1: amplitude})
    elif kind in ("rough", "stationary"):
        if stream is None:
            raise ValueError(f"Initial data '{kind}' needs a noise stream.")
        if kind == "rough":
            k = grid.wavenumbers[1:].astype(float)
            normals = stream.chunk(0, 1).initial_normals(grid.n_modes)[0]
            coeffs = np.zeros(grid.n_modes + 1, dtype=np.complex128)
            coeffs[1:] = complex_gaussian(normals,
                                          amplitude * k ** (beta - 0.5))
            u0 = SpectralField(grid, coeffs)
        else:
            u0 = stationary_field(stream, grid)
    else:
        raise ValueError(f"Unknown initial data '{kind}'. "
                         f"Choose from {', '.join(INITIAL_DATA_KINDS)}.")

    return InitialData(u0, beta, kind)


def _as_field(u0: Union[InitialData, SpectralField]) -> SpectralField:
    return u0.u0 if isinstance(u0, InitialData) else u0


def _physical_size(cfg: SolverConfig) -> int:
    return cfg.grid.dealias_size if cfg.dealias else cfg.grid.n_phys


def _cube(coeffs: np.ndarray, cfg: SolverConfig) \
        -> tuple[np.ndarray, np.ndarray]:
    """Projected coefficients of w^3 and the nodal sup of w."""
    samples = to_physical(SpectralField(cfg.grid, coeffs, mean_zero=False),
                          n_phys=_physical_size(cfg))
    cube = to_spectral(samples ** 3, cfg.grid, mean_zero=cfg.mean_zero)

    return cube.coeffs, np.max(np.abs(samples), axis=-1)


class _BlowUpGuard:
    """Tracks censored replicas and the stability monitor eps h ||u||_inf^2."""

    def __init__(self, cfg: SolverConfig, batch: tuple):
        self.cfg = cfg
        self.batch = batch
        self.alive = np.ones(batch, dtype=bool)
        self.stability = 0.0

    def update(self, sup: np.ndarray, t: float) -> np.ndarray:
        bad = ~np.isfinite(sup) | (sup > self.cfg.blowup)

        finite = sup[self.alive & ~bad]
        if finite.size:
            self.stability = max(self.stability, self.cfg.epsilon *
                                 self.cfg.h * float(np.max(finite)) ** 2)

        if np.any(bad & self.alive):
            if self.batch == ():
                raise FloatingPointError(
                    f"Replica blew up at t = {t:.6g} "
                    f"(||u||_inf = {float(sup):.6g} > {self.cfg.blowup:g})."
                )
            self.alive &= ~bad

        return self.alive

    @property
    def aborted(self) -> Optional[np.ndarray]:
        return None if self.batch == () else ~self.alive


def _deterministic_part(f: SpectralField, cfg: SolverConfig) -> np.ndarray:
    """e^{eps t Lap} u0 on the time grid, shape (n_times, b, N+1)."""
    decay = np.exp(-cfg.rate * np.outer(cfg.times, cfg.grid.eigenvalues))
    flat = f.coeffs.reshape(-1, cfg.grid.n_modes + 1)
    return decay[:, np.newaxis, :] * flat[np.newaxis]


def solve_linear(u0: Union[InitialData, SpectralField], cfg: SolverConfig,
                 stream: NoiseStream) -> Trajectory:
    """
    Z_eps(t) = e^{eps t Lap} u0 + Zbar_eps(t): deterministic part exact per
    mode, noise part from the exact OU recursion.
    """
    f = _as_field(u0)
    if f.grid != cfg.grid:
        raise ValueError("Initial data and solver config use different grids.")

    coeffs = _deterministic_part(f, cfg)
    if coeffs.shape[1] not in (1, stream.count):
        raise ValueError(f"Initial data batch ({coeffs.shape[1]}) does not "
                         f"match the replica count ({stream.count}).")

    if cfg.epsilon > 0:
        noise = stochastic_convolution(stream, cfg.epsilon, cfg.horizon,
                                       cfg.steps, cfg.grid, cfg.drift_factor)
        coeffs = coeffs + noise.coeffs
    else:
        coeffs = np.repeat(coeffs, stream.count // coeffs.shape[1], axis=1)

    return Trajectory(cfg.times, coeffs, cfg.grid, mean_zero=f.mean_zero)


def solve_shifted(Z: Trajectory, cfg: SolverConfig) -> Trajectory:
    """
    Exponential Euler for the shifted equation:
    v(t+h) = e^{eps h Lap} (v(t) - h eps P[(v(t) + Z(t))^3]).
    Blown-up replicas are censored (NaN from the abort on).
    """
    if Z.grid != cfg.grid:
        raise ValueError("Z and solver config use different grids.")
    if Z.n_times != cfg.steps + 1 or not np.allclose(Z.times, cfg.times):
        raise ValueError("Z is not sampled on the solver's time mesh.")

    propagator = np.exp(-cfg.rate * cfg.h * cfg.grid.eigenvalues)
    guard = _BlowUpGuard(cfg, Z.batch_shape)

    v = np.zeros(Z.coeffs.shape, dtype=np.complex128)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(cfg.steps):
            cube, sup = _cube(v[i] + Z.coeffs[i], cfg)
            alive = guard.update(sup, Z.times[i])
            v[i + 1] = propagator * (v[i] - cfg.h * cfg.rate * cube)
            if not np.all(alive):
                v[i + 1][~alive] = np.nan

        _, sup = _cube(v[-1] + Z.coeffs[-1], cfg)
        guard.update(sup, Z.times[-1])

    return Trajectory(Z.times, v, cfg.grid, mean_zero=cfg.mean_zero,
                      aborted=guard.aborted, stability=guard.stability)


def decompose(u0: Union[InitialData, SpectralField], cfg: SolverConfig,
              stream: NoiseStream) -> tuple[Trajectory, Trajectory]:
    """Da Prato-Debussche pair (Z_eps, v_eps) on one stream."""
    Z = solve_linear(u0, cfg, stream)
    v = solve_shifted(Z, cfg)
    return Z, v


def solve_phi4_scaled(u0: Union[InitialData, SpectralField],
                      cfg: SolverConfig, stream: NoiseStream) -> Trajectory:
    """u_eps = Z_eps + v_eps, both driven by the same stream."""
    Z, v = decompose(u0, cfg, stream)
    return Trajectory(Z.times, Z.coeffs + v.coeffs, cfg.grid,
                      mean_zero=Z.mean_zero and v.mean_zero,
                      aborted=v.aborted, stability=v.stability)


def solve_phi4_unscaled(u0: Union[InitialData, SpectralField],
                        cfg: SolverConfig,
                        stream: NoiseStream) -> Trajectory:
    """
    du = Lap u dt - u^3 dt + dW on [0, cfg.horizon]; cfg.epsilon is
    ignored (the unscaled equation is the case eps = 1).
    """
    return solve_phi4_scaled(u0, cfg.with_epsilon(1.0), stream)


def solve_phi4_direct(u0: Union[InitialData, SpectralField],
                      cfg: SolverConfig, stream: NoiseStream,
                      cubic: bool = True) -> Trajectory:
    """
    Semi-implicit Euler-Maruyama for the full scaled equation:
    u(t+h) = (u(t) - h eps P[u(t)^3] + sqrt(eps) dW) / (1 + h eps lambda_k).
    `cubic=False` leaves the linear equation.
    """
    if cfg.scheme != "semi-implicit":
        raise ValueError("solve_phi4_direct needs scheme = 'semi-implicit'.")

    f = _as_field(u0)
    if f.grid != cfg.grid:
        raise ValueError("Initial data and solver config use different grids.")

    N = cfg.grid.n_modes
    denominator = 1.0 + cfg.h * cfg.rate * cfg.grid.eigenvalues
    normals = stream.normals(cfg.steps, N) if cfg.epsilon > 0 else \
        np.zeros((stream.count, cfg.steps, N, 2))
    noise_std = math.sqrt(cfg.epsilon * cfg.h)

    u = np.zeros((cfg.steps + 1, stream.count, N + 1), dtype=np.complex128)
    u[0] = f.coeffs.reshape(-1, N + 1)
    guard = _BlowUpGuard(cfg, (stream.count,))

    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(cfg.steps):
            if cubic:
                cube, sup = _cube(u[i], cfg)
            else:
                cube = np.zeros_like(u[i])
                sup = np.max(np.abs(to_physical(
                    SpectralField(cfg.grid, u[i], False))), axis=-1)
            alive = guard.update(sup, cfg.times[i])

            increment = np.zeros_like(u[i])
            increment[:, 1:] = complex_gaussian(normals[:, i], noise_std)

            u[i + 1] = (u[i] - cfg.h * cfg.rate * cube + increment) / \
                denominator
            if not np.all(alive):
                u[i + 1][~alive] = np.nan

    return Trajectory(cfg.times, u, cfg.grid, mean_zero=f.mean_zero,
                      aborted=guard.aborted, stability=guard.stability)


def scaling_law_check(u0: Union[InitialData, SpectralField], epsilon: float,
                      T: float, steps: int, replicas: int, seed: int = 0,
                      drift_factor: float = 1.0, significance: float = 0.01,
                      n_test_modes: int = 8, n_slices: int = 4,
                      min_replicas: int = 10_000, chunk: int = 2000,
                      workers: Optional[int] = None,
                      verbose: bool = False) -> dict:
    """
    Compares u(eps t) from the unscaled equation on [0, eps T] with u_eps(t)
    from the scaled one on [0, T] (independent streams) by two-sample
    Kolmogorov-Smirnov tests on the cos/sin amplitudes of the modes
    1..n_test_modes at matched time slices. `drift_factor` perturbs the
    scaled run (negative control).
    """
    if replicas < min_replicas:
        raise ValueError(f"Undersampled: {replicas} replicas requested, the "
                         f"scaling check needs >= {min_replicas}.")

    f = _as_field(u0)
    grid = f.grid
    modes = np.arange(1, min(n_test_modes, grid.n_modes) + 1)
    slices = np.unique(np.linspace(0, steps, n_slices + 1).round()
                       .astype(int)[1:])

    cfg_unscaled = SolverConfig(1.0, epsilon * T, steps, grid)
    cfg_scaled = SolverConfig(epsilon, T, steps, grid,
                              drift_factor=drift_factor)

    def task(start: int, count: int):
        unscaled = solve_phi4_unscaled(
            f, cfg_unscaled, NoiseStream(seed, start, count))
        scaled = solve_phi4_scaled(
            f, cfg_scaled, NoiseStream(seed + 1, start, count))
        return (unscaled.coeffs[slices][..., modes],
                scaled.coeffs[slices][..., modes])

    results = run_chunked(task, replicas, chunk, workers, verbose,
                          desc="Scaling law")
    unscaled = np.concatenate([r[0] for r in results], axis=1)
    scaled = np.concatenate([r[1] for r in results], axis=1)

    p_values = np.zeros((len(slices), len(modes), 2))
    for i in range(len(slices)):
        for m in range(len(modes)):
            for part, take in enumerate((np.real, np.imag)):
                a = take(unscaled[i, :, m])
                b = take(scaled[i, :, m])
                a, b = a[np.isfinite(a)], b[np.isfinite(b)]
                p_values[i, m, part] = scipy.stats.ks_2samp(a, b).pvalue

    pass_rate = float(np.mean(p_values > significance))

    return {
        "epsilon": epsilon,
        "drift_factor": drift_factor,
        "times": (T * slices / steps).tolist(),
        "modes": modes.tolist(),
        "p_values": p_values,
        "pass_rate": pass_rate,
        "passed": pass_rate >= 0.95,
        "significance": significance,
        "replicas": replicas,
    }


def mild_residual(v: Trajectory, Z: Trajectory,
                  cfg: SolverConfig) -> np.ndarray:
    """
    sup_t || v(t) - eps int_0^t e^{eps (t-s) Lap} [-(v+Z)^3](s) ds ||_L2 per
    replica, the time integral taken by the trapezoidal rule on the slices.
    """
    n_t = v.n_times
    forcing = np.stack([-_cube(v.coeffs[i] + Z.coeffs[i], cfg)[0]
                        for i in range(n_t)])

    worst = np.zeros(v.batch_shape)
    for n in range(1, n_t):
        lags = v.times[n] - v.times[:n + 1]
        kernel = np.exp(-cfg.rate * np.outer(lags, cfg.grid.eigenvalues))
        kernel = kernel.reshape(n + 1, *(1,) * len(v.batch_shape), -1)
        integral = trapezoid(kernel * forcing[:n + 1], v.times[:n + 1],
                             axis=0)
        residual = SpectralField(cfg.grid, v.coeffs[n] - cfg.rate * integral,
                                 mean_zero=False)
        worst = np.maximum(worst, residual.l2_norm())

    return worst


def energy_ratio(v: Trajectory, Z: Trajectory,
                 cfg: SolverConfig) -> np.ndarray:
    """
    sup_t ||v(t)||_{L6}^6 / (eps int_0^T ||Z(s)||_{Linf}^8 ds) per replica.
    Replicas with a vanishing right-hand side report 0.
    """
    M = _physical_size(cfg)
    period = cfg.grid.period

    v_samples = to_physical(v.field, n_phys=M)
    l6 = (period / M) * np.sum(v_samples ** 6, axis=-1)
    numerator = np.max(l6, axis=0)

    z_sup = np.max(np.abs(to_physical(Z.field, n_phys=M)), axis=-1)
    denominator = cfg.epsilon * trapezoid(z_sup ** 8, Z.times, axis=0)

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(denominator > 0, numerator / denominator, 0.0)

    return ratio


def write_trajectory_csv(traj: Trajectory, path: str):
    """Dumps a single trajectory as rows (time, k, re(c_k), im(c_k))."""
    if traj.batch_shape != ():
        raise ValueError("Only single-replica trajectories can be dumped; "
                         "use Trajectory.replica(r) first.")

    rows = []
    for i, t in enumerate(traj.times):
        for k in traj.grid.wavenumbers:
            c = traj.coeffs[i, k]
            rows.append([float(t), int(k), float(c.real), float(c.imag)])

    write_csv(path, TRAJECTORY_COLUMNS, rows)


def read_trajectory_csv(path: str, n_phys: int = 0,
                        mean_zero: Optional[bool] = None) -> Trajectory:
    """Reads a trajectory dumped by `write_trajectory_csv`."""
    columns = read_columns(path, types={"k": int})

    if list(columns) != TRAJECTORY_COLUMNS:
        raise ValueError(f"Trajectory CSV should have columns "
                         f"{TRAJECTORY_COLUMNS}, got {list(columns)}.")

    times = np.unique(columns["time"])
    n_modes = max(columns["k"])
    grid = TorusGrid(n_modes, n_phys)

    coeffs = np.zeros((len(times), n_modes + 1), dtype=np.complex128)
    index = {t: i for i, t in enumerate(times)}
    for t, k, re, im in zip(*(columns[c] for c in TRAJECTORY_COLUMNS)):
        coeffs[index[t], k] = re + 1j * im

    if mean_zero is None:
        mean_zero = bool(np.all(coeffs[:, 0] == 0))

    return Trajectory(times, coeffs, grid, mean_zero=mean_zero)
