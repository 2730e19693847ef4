"""Rate function of the small-time LDP

I^{z0}(g) = inf (1/2) int_0^T ||h'(t)||_{L2}^2 dt over paths
g(t) = z0 + int_0^t h'(s) ds. The drift of the Phi^4 equation does not
enter: the rate is the Gaussian action of the linear equation.

On sampled paths the infimum is taken over continuous paths through the
samples. The piecewise-linear interpolant attains it, giving
sum_i ||g(t_{i+1}) - g(t_i)||^2 / (2 (t_{i+1} - t_i)). Reports label it
the discrete infimum.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Union
import numpy as np
from phi4.spectral_core import (
    SpectralField, Trajectory, l2_norm, uniform_times
)
from phi4.besov_calculus import DyadicPartition, build_partition, hoelder_norm
from phi4.noise_process import NoiseStream, complex_gaussian

ADMISSIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class RateResult:
    """
    Value of I^{z0} (math.inf where g(0) != z0). Batched paths give arrays.
    `modulus_report` maps levels r to measured Hoelder-1/2 constants.
    """

    value: Union[float, np.ndarray]
    admissible: Union[bool, np.ndarray]
    modulus_report: dict = field(default_factory=dict)


def _increment_norms(g: Trajectory) -> np.ndarray:
    """||g(t_{i+1}) - g(t_i)||_{L2}^2, shape (n_times - 1, *batch)."""
    increments = SpectralField(g.grid, np.diff(g.coeffs, axis=0),
                               mean_zero=False)
    return l2_norm(increments) ** 2


def rate_functional(g: Trajectory, z0: SpectralField) -> RateResult:
    """Discrete I^{z0}(g): exact for the piecewise-linear class."""
    if g.n_times < 2:
        raise ValueError("Rate functional needs at least two time samples.")
    if g.grid != z0.grid:
        raise ValueError("Path and starting point use different grids.")

    start = SpectralField(g.grid, g.coeffs[0] - z0.coeffs, mean_zero=False)
    tolerance = ADMISSIBILITY_TOL * (1.0 + l2_norm(z0))
    admissible = l2_norm(start) <= tolerance

    dt = np.diff(g.times).reshape(-1, *(1,) * len(g.batch_shape))
    action = 0.5 * np.sum(_increment_norms(g) / dt, axis=0)

    value = np.where(admissible, action, math.inf)
    if g.batch_shape == ():
        return RateResult(float(value), bool(admissible))

    return RateResult(value, admissible)


def endpoint_rate(z0: SpectralField, y: SpectralField, T: float) -> float:
    """inf{I^{z0}(g) : g(T) = y} = ||y - z0||_{L2}^2 / (2T)."""
    if T <= 0:
        raise ValueError(f"Endpoint rate needs T > 0, got {T}.")

    distance = SpectralField(z0.grid, y.coeffs - z0.coeffs, mean_zero=False)
    return l2_norm(distance) ** 2 / (2.0 * T)


def linear_path(z0: SpectralField, y: SpectralField, T: float,
                steps: int) -> Trajectory:
    """Straight line from z0 to y on the uniform mesh over [0, T]."""
    s = np.arange(steps + 1) / steps
    coeffs = z0.coeffs + np.multiply.outer(s, y.coeffs - z0.coeffs)
    return Trajectory(T * s, coeffs, z0.grid, z0.mean_zero and y.mean_zero)


def refine_linear(g: Trajectory, factor: int) -> Trajectory:
    """Inserts factor-1 linearly interpolated samples into every step."""
    if factor < 1:
        raise ValueError(f"Refinement factor should be >= 1, got {factor}.")

    s = np.arange(factor) / factor
    weights = s.reshape(1, factor, *(1,) * (g.coeffs.ndim - 1))
    starts, ends = g.coeffs[:-1], g.coeffs[1:]
    inner = starts[:, np.newaxis] + weights * (ends - starts)[:, np.newaxis]
    coeffs = np.concatenate(
        [inner.reshape(-1, *g.coeffs.shape[1:]), g.coeffs[-1:]]
    )

    dt = np.diff(g.times)
    times = (g.times[:-1, np.newaxis] + s * dt[:, np.newaxis]).ravel()
    times = np.append(times, g.times[-1])

    return Trajectory(times, coeffs, g.grid, g.mean_zero)


def sample_level_set(z0: SpectralField, r: float, T: float, steps: int,
                     stream: NoiseStream, linear: bool = False) -> list:
    """
    Random piecewise-linear paths from z0 with I^{z0} = r exactly, one per
    replica of the stream. Increments have mode amplitudes ~ 1/k;
    `linear` draws one direction per path and walks it at constant speed.
    """
    if r < 0:
        raise ValueError(f"Level r should be >= 0, got {r}.")

    grid = z0.grid
    k = grid.wavenumbers[1:].astype(float)
    normals = stream.normals(1 if linear else steps, grid.n_modes)

    increments = np.zeros((stream.count, steps, grid.n_modes + 1),
                          dtype=np.complex128)
    increments[..., 1:] = complex_gaussian(normals, 1.0 / k)

    h = T / steps
    field_ = SpectralField(grid, increments, mean_zero=False)
    action = 0.5 * np.sum(l2_norm(field_) ** 2, axis=-1) / h
    ratio = np.divide(r, action, out=np.zeros_like(action), where=action > 0)
    scale = np.sqrt(ratio)[:, np.newaxis, np.newaxis]

    coeffs = np.zeros((steps + 1, stream.count, grid.n_modes + 1),
                      dtype=np.complex128)
    coeffs[1:] = np.cumsum(np.moveaxis(scale * increments, 1, 0), axis=0)
    coeffs += z0.coeffs

    times = uniform_times(T, steps)
    return [Trajectory(times, coeffs[:, i], grid, z0.mean_zero)
            for i in range(stream.count)]


def level_set_modulus(paths: list, r: float, alpha: float = 0.05,
                      P: Optional[DyadicPartition] = None) -> dict:
    """
    max over paths and time pairs of
    ||g(t) - g(s)||_{-1/2-alpha} / ((2r)^{1/2} |t-s|^{1/2})
    for paths in the level set {I <= r}, together with the endpoint
    radius ratio ||g(T) - g(0)||_{L2} / (2rT)^{1/2}.
    """
    if len(paths) == 0:
        raise ValueError("Level set modulus needs at least one path.")
    if r <= 0:
        raise ValueError(f"Level r should be > 0, got {r}.")

    P = P or build_partition(paths[0].grid)

    ratios = []
    radii = []
    for g in paths:
        if g.batch_shape != ():
            raise ValueError("Level set paths should be single trajectories.")

        rate = rate_functional(g, g.state(0)).value
        if rate > r * (1.0 + 1e-9):
            raise ValueError(f"Path with rate {rate:.6g} outside the level "
                             f"set I <= {r}.")

        i, j = np.triu_indices(g.n_times, k=1)
        differences = SpectralField(g.grid, g.coeffs[j] - g.coeffs[i],
                                    mean_zero=False)
        norms = hoelder_norm(differences, -0.5 - alpha, P)
        gaps = np.sqrt(2.0 * r * (g.times[j] - g.times[i]))
        ratios.append(float(np.max(norms / gaps)))

        endpoint = SpectralField(g.grid, g.coeffs[-1] - g.coeffs[0],
                                 mean_zero=False)
        radii.append(float(l2_norm(endpoint) /
                           math.sqrt(2.0 * r * g.horizon)))

    return {
        "level": r,
        "alpha": alpha,
        "ratios": np.array(ratios),
        "max_ratio": float(np.max(ratios)),
        "endpoint_radius": float(np.max(radii)),
        "n_paths": len(paths),
    }


def modulus_sweep(paths_by_level: dict, alpha: float = 0.05,
                  P: Optional[DyadicPartition] = None) -> RateResult:
    """
    Runs `level_set_modulus` over {r: paths}. The value is the spread
    max/min of the measured constants across levels (ideally <= 2).
    """
    report = {r: level_set_modulus(paths, r, alpha, P)["max_ratio"]
              for r, paths in paths_by_level.items()}

    constants = np.array(list(report.values()))
    if np.all(constants == 0):
        spread = 1.0
    elif np.any(constants == 0):
        spread = math.inf
    else:
        spread = float(np.max(constants) / np.min(constants))

    return RateResult(spread, True, report)
