"""Besov calculus: Littlewood-Paley blocks and Besov/Hoelder norms

The dyadic partition is built from one smooth radial bump chi, equal to 1
on |z| <= 3/4 and vanishing for |z| >= 4/3, with theta(z) = chi(z/2) - chi(z).
The telescoping sum makes chi + sum_j theta(2^-j .) = 1 on the whole
truncated frequency grid.
"""

import math
from dataclasses import dataclass
from typing import Optional
import numpy as np
from phi4.spectral_core import (
    SpectralField, TorusGrid, heat_semigroup, to_physical
)

CHI_INNER = 3.0 / 4.0
CHI_OUTER = 4.0 / 3.0


def smooth_step(s: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)),
                     0.0)
    return a / (a + b)


def chi(z: np.ndarray) -> np.ndarray:
    """Radial bump: 1 on |z| <= 3/4, 0 on |z| >= 4/3."""
    r = np.abs(np.asarray(z, dtype=float))
    return 1.0 - smooth_step((r - CHI_INNER) / (CHI_OUTER - CHI_INNER))


def theta(z: np.ndarray) -> np.ndarray:
    """Annulus window supported in 3/4 <= |z| <= 8/3."""
    z = np.asarray(z, dtype=float)
    return chi(z / 2.0) - chi(z)


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    """
    Windows tabulated on k = 0..N. Row 0 holds chi (level -1), row j+1
    holds theta(2^-j k). `n_quad` is the oversampled node count used
    for L^p norms.
    """

    grid: TorusGrid
    windows: np.ndarray
    j_max: int
    n_quad: int

    @property
    def levels(self) -> range:
        return range(-1, self.j_max + 1)

    @property
    def chi(self) -> np.ndarray:
        return self.windows[0]

    def theta(self, j: int) -> np.ndarray:
        return self.windows[j + 1]

    def window(self, j: int) -> np.ndarray:
        if not -1 <= j <= self.j_max:
            raise ValueError(f"Level {j} outside [-1, {self.j_max}].")
        return self.windows[j + 1]


@dataclass(frozen=True)
class BesovIndex:
    """(alpha, p, q) with p, q in [1, inf]; Hoelder C^alpha is p = q = inf."""

    alpha: float
    p: float = math.inf
    q: float = math.inf

    def __post_init__(self):
        for name in ("p", "q"):
            value = getattr(self, name)
            if not 1.0 <= value <= math.inf:
                raise ValueError(f"Besov index {name} should lie in "
                                 f"[1, inf], got {value}.")

    @classmethod
    def hoelder(cls, alpha: float) -> "BesovIndex":
        return cls(alpha, math.inf, math.inf)


def build_partition(grid: TorusGrid) -> DyadicPartition:
    """
    Tabulates the dyadic partition of unity on the frequency grid.
    j_max is the largest level whose annulus meets |k| <= N.
    """
    N = grid.n_modes
    if N < 2:
        raise ValueError(f"N = {N} is too small to host one annulus "
                         "(need N >= 2).")

    j_max = int(math.floor(math.log2(N / CHI_INNER)))
    k = grid.wavenumbers.astype(float)

    windows = [chi(k)] + [theta(k / 2.0 ** j) for j in range(j_max + 1)]

    # Oversampling keeps nodal maxima close to the true sup norms
    n_quad = max(grid.dealias_size, 8 * (N + 1))

    return DyadicPartition(grid, np.array(windows), j_max, n_quad)


def lp_block(f: SpectralField, j: int, P: DyadicPartition) -> SpectralField:
    """Delta_j f = F^-1(theta(2^-j .) F f), Delta_-1 f = F^-1(chi F f)."""
    return f.with_coeffs(P.window(j) * f.coeffs)


def lp_blocks(f: SpectralField, P: DyadicPartition) -> SpectralField:
    """All blocks at once; the level axis is inserted before the modes."""
    return f.with_coeffs(P.windows * f.coeffs[..., np.newaxis, :])


def lp_norm(samples: np.ndarray, p: float, period: float = 2.0) \
        -> np.ndarray:
    """Quadrature L^p(T) norm of nodal samples along the last axis."""
    if math.isinf(p):
        return np.max(np.abs(samples), axis=-1)

    M = samples.shape[-1]
    integral = (period / M) * np.sum(np.abs(samples) ** p, axis=-1)
    return integral ** (1.0 / p)


def block_norms(f: SpectralField, p: float, P: DyadicPartition) \
        -> np.ndarray:
    """||Delta_j f||_{L^p} for j = -1..j_max (level axis last)."""
    samples = to_physical(lp_blocks(f, P), n_phys=P.n_quad)
    return lp_norm(samples, p, f.grid.period)


def besov_norm(f: SpectralField, idx: BesovIndex,
               P: DyadicPartition) -> np.ndarray:
    """
    (sum_j (2^{j alpha} ||Delta_j f||_{L^p})^q)^{1/q}, sup over j for
    q = inf. Batched fields give one norm per batch entry.
    """
    weights = 2.0 ** (idx.alpha * np.arange(-1, P.j_max + 1))
    weighted = weights * block_norms(f, idx.p, P)

    if math.isinf(idx.q):
        return np.max(weighted, axis=-1)
    return np.sum(weighted ** idx.q, axis=-1) ** (1.0 / idx.q)


def hoelder_norm(f: SpectralField, alpha: float,
                 P: DyadicPartition) -> np.ndarray:
    return besov_norm(f, BesovIndex.hoelder(alpha), P)


def verify_embedding(fields: SpectralField, alpha: float, p1: float,
                     q1: float, p2: float, q2: float,
                     P: Optional[DyadicPartition] = None) -> dict:
    """
    Ratio ||f||_{B^{alpha-(1/p1-1/p2)}_{p2,q2}} / ||f||_{B^alpha_{p1,q1}}
    for every field in the batch. Zero fields are skipped.
    """
    if not (p1 <= p2 and q1 <= q2):
        raise ValueError("Embedding needs p1 <= p2 and q1 <= q2.")

    P = P or build_partition(fields.grid)
    shift = 1.0 / p1 - 1.0 / p2

    source = besov_norm(fields, BesovIndex(alpha, p1, q1), P)
    target = besov_norm(fields, BesovIndex(alpha - shift, p2, q2), P)

    source, target = np.atleast_1d(source), np.atleast_1d(target)
    valid = source > 0
    if not np.any(valid):
        raise ValueError("Embedding check needs at least one non-zero field.")

    ratios = target[valid] / source[valid]

    return {
        "ratios": ratios,
        "max_ratio": float(np.max(ratios)),
        "skipped": int(np.sum(~valid)),
        "n_modes": fields.grid.n_modes,
    }


def verify_schauder(fields: SpectralField, alpha: float, delta: float,
                    t_grid, P: Optional[DyadicPartition] = None) -> dict:
    """
    sup over t of t^{delta/2} ||e^{t Laplacian} f||_{alpha+delta} / ||f||_alpha,
    per field of the batch.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if delta < 0:
        raise ValueError(f"Schauder check needs delta >= 0, got {delta}.")
    if t_grid.size == 0 or np.any(t_grid <= 0):
        raise ValueError("Schauder check needs a grid of positive times.")

    P = P or build_partition(fields.grid)

    base = np.atleast_1d(hoelder_norm(fields, alpha, P))
    if np.any(base == 0):
        raise ValueError("Schauder check is undefined for ||f||_alpha = 0.")

    ratios = np.zeros((len(t_grid), *base.shape))
    for i, t in enumerate(t_grid):
        smoothed = hoelder_norm(heat_semigroup(fields, t), alpha + delta, P)
        ratios[i] = t ** (delta / 2.0) * np.atleast_1d(smoothed) / base

    per_field = np.max(ratios, axis=0)

    return {
        "ratios": per_field,
        "ratio_by_time": ratios,
        "max_ratio": float(np.max(per_field)),
        "n_modes": fields.grid.n_modes,
    }
