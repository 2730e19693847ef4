"""Spectral core: torus geometry and field representations

Fields live on the torus of period 2 and are stored by their Fourier
coefficients c_k = <f, e_k> in the orthonormal basis
e_k(x) = 2^(-1/2) exp(i pi k x). Since all fields are real, only the
coefficients k = 0..N are stored; c_{-k} = conj(c_k) is implied.
Coefficient arrays may carry leading batch axes (replicas, time slices),
every operation here acts on the last axis only.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional
import numpy as np
import scipy.fft


def _even_at_least(n: int) -> int:
    return n + (n % 2)


@dataclass(frozen=True)
class TorusGrid:
    """Fourier truncation |k| <= n_modes and physical quadrature nodes."""

    n_modes: int
    n_phys: int = 0
    period: float = field(default=2.0, init=False)

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError(f"n_modes should be >= 1, got {self.n_modes}.")

        # 0 means: smallest grid hosting dealiased cubic products
        if self.n_phys == 0:
            object.__setattr__(self, "n_phys",
                               _even_at_least(3 * self.n_modes + 1))

        if self.n_phys < 2 * self.n_modes + 2:
            raise ValueError(
                f"n_phys ({self.n_phys}) should be >= 2N+2 "
                f"({2 * self.n_modes + 2}) for exact quadrature."
            )

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return np.arange(self.n_modes + 1)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues lambda_k = pi^2 k^2 of -Laplacian on e_k."""
        return (np.pi * self.wavenumbers) ** 2

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.period * np.arange(self.n_phys) / self.n_phys

    @property
    def can_dealias(self) -> bool:
        return self.n_phys >= 3 * self.n_modes + 1

    @cached_property
    def dealias_size(self) -> int:
        """Size of the zero-padded grid used for cubic products."""
        return max(self.n_phys, _even_at_least(3 * self.n_modes + 1))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """A real field (or a batch of them) on the torus."""

    grid: TorusGrid
    coeffs: np.ndarray
    mean_zero: bool = True

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.complex128)

        if coeffs.ndim == 0 or coeffs.shape[-1] != self.grid.n_modes + 1:
            raise ValueError(
                f"Expected coefficients for k = 0..{self.grid.n_modes} on "
                f"the last axis, got shape {coeffs.shape}."
            )

        # c_0 of a real field is real; it vanishes on the mean-zero flow
        coeffs[..., 0] = 0.0 if self.mean_zero else coeffs[..., 0].real
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, grid: TorusGrid, batch: tuple = (),
              mean_zero: bool = True) -> "SpectralField":
        return cls(grid, np.zeros((*batch, grid.n_modes + 1)), mean_zero)

    @classmethod
    def from_modes(cls, grid: TorusGrid, modes: dict,
                   mean_zero: bool = True) -> "SpectralField":
        """
        Builds a field from {k: c_k}. Negative k are folded onto
        their conjugate partner.
        """
        coeffs = np.zeros(grid.n_modes + 1, dtype=np.complex128)
        for k, value in modes.items():
            if abs(k) > grid.n_modes:
                raise ValueError(f"Mode {k} outside |k| <= {grid.n_modes}.")
            coeffs[abs(k)] = value if k >= 0 else np.conj(value)
        return cls(grid, coeffs, mean_zero)

    @classmethod
    def from_amplitudes(cls, grid: TorusGrid, cos_amp: np.ndarray,
                        sin_amp: np.ndarray) -> "SpectralField":
        """
        Builds a mean-zero field sum_k a_k cos(pi k x) + b_k sin(pi k x)
        from real amplitudes for k = 1..N (last axis).
        """
        cos_amp = np.asarray(cos_amp, dtype=float)
        sin_amp = np.asarray(sin_amp, dtype=float)
        coeffs = np.zeros((*cos_amp.shape[:-1], grid.n_modes + 1),
                          dtype=np.complex128)
        coeffs[..., 1:] = (cos_amp - 1j * sin_amp) / math.sqrt(2.0)
        return cls(grid, coeffs, True)

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[:-1]

    def amplitudes(self) -> tuple[np.ndarray, np.ndarray]:
        """Real cos/sin amplitudes <f, cos(pi k x)>, <f, sin(pi k x)>, k >= 1."""
        modes = self.coeffs[..., 1:]
        return math.sqrt(2.0) * modes.real, -math.sqrt(2.0) * modes.imag

    def full_coeffs(self) -> np.ndarray:
        """Coefficients for k = -N..N on the last axis."""
        negative = np.conj(self.coeffs[..., :0:-1])
        return np.concatenate([negative, self.coeffs], axis=-1)

    def l2_norm(self) -> np.ndarray:
        return l2_norm(self)

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs, self.mean_zero)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        check_grid(self, other.grid)
        return SpectralField(self.grid, self.coeffs + other.coeffs,
                             self.mean_zero and other.mean_zero)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        check_grid(self, other.grid)
        return SpectralField(self.grid, self.coeffs - other.coeffs,
                             self.mean_zero and other.mean_zero)

    def __neg__(self) -> "SpectralField":
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return self.with_coeffs(scalar * self.coeffs)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Fields sampled on the uniform grid t_i = i*h over [0, T].
    `coeffs` has shape (n_times, *batch, N+1). `aborted` flags replicas
    censored by the blow-up guard (None when nothing was monitored).
    """

    times: np.ndarray
    coeffs: np.ndarray
    grid: TorusGrid
    mean_zero: bool = True
    aborted: Optional[np.ndarray] = None
    stability: float = 0.0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)

        if times.ndim != 1 or len(times) < 1:
            raise ValueError("Trajectory times should be a non-empty 1d array.")
        if np.any(np.diff(times) <= 0):
            raise ValueError("Trajectory times should be strictly increasing.")
        if coeffs.shape[0] != len(times) or \
                coeffs.shape[-1] != self.grid.n_modes + 1:
            raise ValueError(
                f"Coefficient shape {coeffs.shape} does not match "
                f"{len(times)} times and N = {self.grid.n_modes}."
            )

        object.__setattr__(self, "times", times)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def n_times(self) -> int:
        return len(self.times)

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0]) if self.n_times > 1 \
            else 0.0

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[1:-1]

    def state(self, i: int) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[i], self.mean_zero)

    @property
    def states(self) -> list:
        return [self.state(i) for i in range(self.n_times)]

    @property
    def field(self) -> SpectralField:
        """All slices as one batched field (time on the first axis)."""
        return SpectralField(self.grid, self.coeffs, self.mean_zero)

    def replica(self, r: int) -> "Trajectory":
        aborted = None if self.aborted is None else self.aborted[r]
        return Trajectory(self.times, self.coeffs[:, r], self.grid,
                          self.mean_zero, aborted)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        check_grid(other.state(0), self.grid)
        if not np.array_equal(self.times, other.times):
            raise ValueError("Trajectories live on different time meshes.")
        return Trajectory(self.times, self.coeffs - other.coeffs, self.grid,
                          self.mean_zero and other.mean_zero,
                          _merge_aborted(self.aborted, other.aborted))


def _merge_aborted(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return np.logical_or(a, b)


def check_grid(f: SpectralField, grid: TorusGrid) -> bool:
    """Raises a ValueError for fields living on another grid."""
    if f.grid != grid:
        raise ValueError(f"Grid mismatch: field on {f.grid}, "
                         f"expected {grid}.")
    return True


def to_physical(f: SpectralField, n_phys: Optional[int] = None) -> np.ndarray:
    """
    Evaluates sum_k c_k e_k(x_m) at the M uniform nodes x_m = 2m/M.
    `n_phys` overrides the grid size (zero padding), e.g. for
    dealiased products or oversampled sup norms.
    """
    M = f.grid.n_phys if n_phys is None else n_phys
    if M < 2 * f.grid.n_modes + 2:
        raise ValueError(f"Physical grid of {M} points cannot host "
                         f"N = {f.grid.n_modes}.")

    padded = np.zeros((*f.batch_shape, M // 2 + 1), dtype=np.complex128)
    padded[..., :f.grid.n_modes + 1] = f.coeffs

    return (M / math.sqrt(2.0)) * scipy.fft.irfft(padded, n=M, axis=-1)


def to_spectral(samples: np.ndarray, grid: TorusGrid,
                mean_zero: bool = True) -> SpectralField:
    """
    Inverse of `to_physical`: projects nodal samples (any even number of
    nodes on the last axis) onto the modes |k| <= N.
    """
    samples = np.asarray(samples, dtype=float)
    M = samples.shape[-1]
    if M < 2 * grid.n_modes + 2:
        raise ValueError(f"{M} samples cannot resolve N = {grid.n_modes}.")

    coeffs = (math.sqrt(2.0) / M) * scipy.fft.rfft(samples, axis=-1)

    return SpectralField(grid, coeffs[..., :grid.n_modes + 1], mean_zero)


def l2_norm(f: SpectralField) -> np.ndarray:
    """L2(T) norm from the coefficients (Parseval)."""
    power = np.abs(f.coeffs) ** 2
    return np.sqrt(power[..., 0] + 2.0 * power[..., 1:].sum(axis=-1))


def laplacian(f: SpectralField) -> SpectralField:
    """c_k -> -lambda_k c_k."""
    return f.with_coeffs(-f.grid.eigenvalues * f.coeffs)


def heat_multiplier(grid: TorusGrid, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError(f"Heat semigroup needs t >= 0, got {t}.")
    return np.exp(-t * grid.eigenvalues)


def heat_semigroup(f: SpectralField, t: float) -> SpectralField:
    """e^{t Laplacian} f, i.e. c_k -> exp(-t lambda_k) c_k."""
    return f.with_coeffs(heat_multiplier(f.grid, t) * f.coeffs)


def uniform_times(horizon: float, steps: int) -> np.ndarray:
    if horizon <= 0:
        raise ValueError(f"Horizon should be > 0, got {horizon}.")
    if steps < 1:
        raise ValueError(f"Number of steps should be >= 1, got {steps}.")
    return horizon * np.arange(steps + 1) / steps
