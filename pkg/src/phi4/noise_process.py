"""Noise process: cylindrical Wiener process in Fourier representation

Every standard normal is addressed by (seed, replica, step, mode, part).
The Philox bit generator is keyed by (seed, step) and its counter is
positioned at the replica's block, so a replica's draws do not depend on
how replicas are chunked or scheduled. Uniforms are mapped to normals by
the inverse normal CDF, one raw word per normal.
"""

import math
from dataclasses import dataclass, replace
import numpy as np
from scipy.special import ndtri
from phi4.spectral_core import (
    SpectralField, TorusGrid, Trajectory, uniform_times
)

UINT64_MASK = (1 << 64) - 1

# Step key reserved for initial-data draws (never reached by time steps)
INITIAL_DATA_STEP = 1 << 63


def _words_per_replica(n_modes: int) -> int:
    # Philox emits 4 words per counter value
    return 4 * math.ceil(2 * n_modes / 4)


def philox_normals(seed: int, step: int, first_replica: int, count: int,
                   n_modes: int) -> np.ndarray:
    """
    Standard normals for one step key, shape (count, n_modes, 2).
    The last axis holds the cos/sin (real/imaginary) parts.
    """
    stride = _words_per_replica(n_modes)

    bitgen = np.random.Philox(
        key=np.array([seed & UINT64_MASK, step & UINT64_MASK],
                     dtype=np.uint64),
        counter=first_replica * stride // 4
    )
    raw = bitgen.random_raw(count * stride).reshape(count, stride)
    raw = raw[:, :2 * n_modes]

    uniform = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53

    return ndtri(uniform).reshape(count, n_modes, 2)


@dataclass(frozen=True)
class NoiseStream:
    """
    Key of a block of `count` consecutive replicas starting at `replica`.
    `step` is the first time step addressed, `refine` the number of fine
    Brownian increments summed into one step. A muted stream yields zeros.
    """

    seed: int
    replica: int = 0
    count: int = 1
    step: int = 0
    refine: int = 1
    muted: bool = False

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError(f"Seed should be >= 0, got {self.seed}.")
        if self.replica < 0 or self.count < 1:
            raise ValueError("Replica block should start at >= 0 and hold "
                             ">= 1 replicas.")
        if self.refine < 1:
            raise ValueError(f"Refinement should be >= 1, got {self.refine}.")

    @property
    def replicas(self) -> np.ndarray:
        return np.arange(self.replica, self.replica + self.count)

    def chunk(self, start: int, count: int) -> "NoiseStream":
        """Sub-block of replicas, indices relative to this block."""
        if start < 0 or start + count > self.count:
            raise ValueError("Chunk outside the replica block.")
        return replace(self, replica=self.replica + start, count=count)

    def refined(self, factor: int) -> "NoiseStream":
        return replace(self, refine=self.refine * factor)

    def weighted_normals(self, n_steps: int, n_modes: int,
                         weights: np.ndarray) -> np.ndarray:
        """
        Per step, the sum over the `refine` fine draws of the step with the
        i-th fine draw scaled by weights[i] (shape (refine, n_modes)).
        Returns shape (count, n_steps, n_modes, 2).
        """
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (self.refine, n_modes):
            raise ValueError(f"Weights should have shape ({self.refine}, "
                             f"{n_modes}), got {weights.shape}.")

        out = np.zeros((self.count, n_steps, n_modes, 2))
        if self.muted:
            return out

        for s in range(n_steps):
            first_fine = (self.step + s) * self.refine
            for i in range(self.refine):
                out[:, s] += weights[i, :, np.newaxis] * philox_normals(
                    self.seed, first_fine + i, self.replica, self.count,
                    n_modes)

        return out

    def normals(self, n_steps: int, n_modes: int) -> np.ndarray:
        """
        Standard normals of shape (count, n_steps, n_modes, 2). With
        refinement each entry is the normalised sum of `refine` fine draws,
        i.e. the Brownian increment over the coarse step.
        """
        weights = np.full((self.refine, n_modes),
                          1.0 / math.sqrt(self.refine))
        return self.weighted_normals(n_steps, n_modes, weights)

    def initial_normals(self, n_modes: int) -> np.ndarray:
        """Normals reserved for random initial data, shape (count, n_modes, 2)."""
        if self.muted:
            return np.zeros((self.count, n_modes, 2))
        return philox_normals(self.seed, INITIAL_DATA_STEP, self.replica,
                              self.count, n_modes)


def complex_gaussian(normals: np.ndarray, std: np.ndarray) -> np.ndarray:
    """
    Combines (..., n_modes, 2) normals into complex coefficients whose
    real mode amplitudes sqrt(2) Re c_k, -sqrt(2) Im c_k have std `std`.
    """
    return (std / math.sqrt(2.0)) * (normals[..., 0] + 1j * normals[..., 1])


def _embed(grid: TorusGrid, modes: np.ndarray) -> np.ndarray:
    coeffs = np.zeros((*modes.shape[:-1], grid.n_modes + 1),
                      dtype=np.complex128)
    coeffs[..., 1:] = modes
    return coeffs


def wiener_increment(stream: NoiseStream, dt: float,
                     grid: TorusGrid) -> SpectralField:
    """
    W(t+dt) - W(t) at the stream's step: each real mode amplitude is
    N(0, dt), the zero mode is left out.
    """
    if dt <= 0:
        raise ValueError(f"Increment needs dt > 0, got {dt}.")

    normals = stream.normals(1, grid.n_modes)[:, 0]
    modes = complex_gaussian(normals, math.sqrt(dt))

    return SpectralField(grid, _embed(grid, modes), mean_zero=True)


def ou_coefficients(grid: TorusGrid, epsilon: float, h: float,
                    drift_factor: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """
    One-step decay exp(-eps lambda_k h) and innovation std of the real mode
    amplitudes, sqrt((1 - exp(-2 eps lambda_k h)) / (2 lambda_k)), k >= 1.
    """
    lam = drift_factor * grid.eigenvalues[1:]
    decay = np.exp(-epsilon * lam * h)
    variance = -np.expm1(-2.0 * epsilon * lam * h) / (2.0 * lam)

    return decay, np.sqrt(variance)


def ou_innovations(stream: NoiseStream, epsilon: float, h: float, steps: int,
                   grid: TorusGrid, drift_factor: float = 1.0) \
        -> tuple[np.ndarray, np.ndarray]:
    """
    Innovations of the exact OU recursion over `steps` steps of size h,
    sum_i exp(-eps lambda_k (h - (i+1) h_f)) std_f xi_i over the fine draws
    of each step (h_f = h / refine), and the one-step decay.
    """
    r = stream.refine
    fine_decay, fine_std = ou_coefficients(grid, epsilon, h / r, drift_factor)
    lag = np.arange(r - 1, -1, -1)[:, np.newaxis]
    weights = fine_decay ** lag * fine_std

    return (stream.weighted_normals(steps, grid.n_modes, weights),
            fine_decay ** r)


def stochastic_convolution(stream: NoiseStream, epsilon: float, T: float,
                           steps: int, grid: TorusGrid,
                           drift_factor: float = 1.0) -> Trajectory:
    """
    sqrt(eps) int_0^t e^{eps (t-s) Laplacian} dW(s) on the uniform time grid,
    via the exact per-mode Ornstein-Uhlenbeck recursion. Starts at 0.
    On a refined stream the fine draws of a step are discounted by their
    remaining decay, so Z agrees with the fine-step solution at the
    coarse times.
    """
    if epsilon <= 0:
        raise ValueError(f"Stochastic convolution needs eps > 0, "
                         f"got {epsilon}.")

    times = uniform_times(T, steps)
    innovations, decay = ou_innovations(stream, epsilon, T / steps, steps,
                                        grid, drift_factor)

    modes = np.zeros((steps + 1, stream.count, grid.n_modes),
                     dtype=np.complex128)
    for i in range(steps):
        modes[i + 1] = decay * modes[i] + \
            complex_gaussian(innovations[:, i], 1.0)

    return Trajectory(times, _embed(grid, modes), grid, mean_zero=True)


def brownian_path(stream: NoiseStream, epsilon: float, T: float, steps: int,
                  grid: TorusGrid, z0: SpectralField = None) -> Trajectory:
    """
    x_eps(t) = z0 + sqrt(eps) W(t), driven by the same normals as
    `stochastic_convolution` on this stream.
    """
    if epsilon < 0:
        raise ValueError(f"Brownian path needs eps >= 0, got {epsilon}.")

    times = uniform_times(T, steps)
    h = T / steps
    normals = stream.normals(steps, grid.n_modes)

    increments = complex_gaussian(normals, math.sqrt(epsilon * h))
    modes = np.zeros((steps + 1, stream.count, grid.n_modes),
                     dtype=np.complex128)
    modes[1:] = np.cumsum(np.moveaxis(increments, 1, 0), axis=0)

    coeffs = _embed(grid, modes)
    mean_zero = True
    if z0 is not None:
        coeffs = coeffs + z0.coeffs
        mean_zero = z0.mean_zero

    return Trajectory(times, coeffs, grid, mean_zero=mean_zero)


def stationary_field(stream: NoiseStream, grid: TorusGrid) -> SpectralField:
    """
    Draws from the invariant law of the linear flow: real mode amplitudes
    N(0, 1/(2 lambda_k)), independently of eps.
    """
    std = 1.0 / np.sqrt(2.0 * grid.eigenvalues[1:])
    modes = complex_gaussian(stream.initial_normals(grid.n_modes), std)

    return SpectralField(grid, _embed(grid, modes), mean_zero=True)
