"""Estimators for the Monte Carlo experiments

Rare-event probabilities with exact binomial intervals, log-log slope
fits with replicate-bootstrap errors, moment profiles and the
exponential Chebyshev proxy.
"""

import math
from dataclasses import dataclass, asdict
import numpy as np
import scipy.stats
from scipy.special import logsumexp

TAIL_COLUMNS = ["epsilon", "delta", "hits", "replicas", "p_hat", "ci_low",
                "ci_high", "eps_log_p", "censored"]
MOMENT_COLUMNS = ["epsilon", "p", "moment", "stderr"]
BOOTSTRAP_RESAMPLES = 200


def clopper_pearson(hits: int, n: int,
                    confidence: float = 0.95) -> tuple[float, float]:
    """Exact binomial interval on hits/n."""
    if n < 1 or not 0 <= hits <= n:
        raise ValueError(f"Invalid binomial counts: {hits} hits of {n}.")

    alpha = 1.0 - confidence
    b = scipy.stats.beta.ppf
    lo = b(alpha / 2, hits, n - hits + 1) if hits > 0 else 0.0
    hi = b(1 - alpha / 2, hits + 1, n - hits) if hits < n else 1.0

    return float(lo), float(hi)


@dataclass(frozen=True)
class TailEstimate:
    """
    p_hat = hits/replicas with its Clopper-Pearson interval. Zero hits are
    censored: eps_log_p then holds eps*log(3/replicas) (rule of three).
    """

    epsilon: float
    delta: float
    hits: int
    replicas: int
    p_hat: float
    ci_low: float
    ci_high: float
    eps_log_p: float
    censored: bool

    @classmethod
    def from_counts(cls, epsilon: float, delta: float, hits: int,
                    replicas: int, confidence: float = 0.95) \
            -> "TailEstimate":
        lo, hi = clopper_pearson(hits, replicas, confidence)
        p_hat = hits / replicas
        censored = hits == 0
        bound = 3.0 / replicas if censored else p_hat

        return cls(epsilon, delta, int(hits), int(replicas), p_hat,
                   min(lo, p_hat), max(hi, p_hat),
                   epsilon * math.log(bound), censored)

    def as_row(self) -> dict:
        return asdict(self)

    def overlaps(self, other: "TailEstimate") -> bool:
        """Whether the eps*log images of both intervals intersect."""
        def image(t):
            lo = t.epsilon * math.log(t.ci_low) if t.ci_low > 0 else -math.inf
            return lo, t.epsilon * math.log(t.ci_high)

        a, b = image(self), image(other)
        return a[0] <= b[1] and b[0] <= a[1]


def monotone_within_ci(estimates: list) -> bool:
    """
    eps_log_p non-increasing along the sweep, allowing increases covered
    by overlapping intervals. Censored rows are skipped.
    """
    rows = [e for e in estimates if not e.censored]
    for a, b in zip(rows[:-1], rows[1:]):
        if b.eps_log_p > a.eps_log_p and not a.overlaps(b):
            return False
    return True


@dataclass(frozen=True)
class LogLogFit:
    """OLS fit log(mean) = slope * log(eps) + intercept."""

    slope: float
    intercept: float
    stderr: float
    epsilons: np.ndarray
    means: np.ndarray

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "epsilons": self.epsilons.tolist(),
            "means": self.means.tolist(),
        }


def check_span(epsilons, min_points: int = 4, decades: float = 1.2) -> bool:
    """Raises a ValueError for eps grids too short for a slope fit."""
    epsilons = np.asarray(epsilons, dtype=float)
    if len(epsilons) < min_points:
        raise ValueError(f"Slope fit needs >= {min_points} eps values, "
                         f"got {len(epsilons)}.")

    span = math.log10(np.max(epsilons) / np.min(epsilons))
    if span < decades - 1e-12:
        raise ValueError(f"Slope fit needs eps values spanning >= {decades} "
                         f"decades, got {span:.3g}.")
    return True


def _ols_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def fit_loglog(epsilons, samples: list, resamples: int = BOOTSTRAP_RESAMPLES,
               seed: int = 0) -> LogLogFit:
    """
    Fits log E[X_eps] against log eps. `samples[i]` holds the replicate
    values at epsilons[i]; the standard error comes from resampling
    replicates within every eps.
    """
    epsilons = np.asarray(epsilons, dtype=float)
    samples = [np.asarray(s, dtype=float) for s in samples]
    samples = [s[np.isfinite(s)] for s in samples]

    if len(epsilons) < 2 or len(samples) != len(epsilons):
        raise ValueError("Degenerate fit: need >= 2 eps values with samples.")
    if any(len(s) == 0 for s in samples):
        raise ValueError("Degenerate fit: an eps value has no finite samples.")

    means = np.array([np.mean(s) for s in samples])
    if np.any(means <= 0):
        raise ValueError("Degenerate fit: non-positive mean.")

    x = np.log(epsilons)
    slope, intercept = _ols_slope(x, np.log(means))

    rng = np.random.Generator(np.random.Philox(seed))
    slopes = np.zeros(resamples)
    for b in range(resamples):
        boot = np.array([np.mean(s[rng.integers(0, len(s), len(s))])
                         for s in samples])
        boot = np.maximum(boot, np.finfo(float).tiny)
        slopes[b] = _ols_slope(x, np.log(boot))[0]

    stderr = float(np.std(slopes, ddof=1)) if resamples > 1 else 0.0

    return LogLogFit(slope, intercept, stderr, epsilons, means)


def moment_profile(samples: np.ndarray, ps) -> tuple[np.ndarray, np.ndarray]:
    """
    (E X^p)^{1/p} for every p with delta-method standard errors.
    Samples are taken in absolute value.
    """
    x = np.abs(np.asarray(samples, dtype=float))
    x = x[np.isfinite(x)]
    if x.size < 2:
        raise ValueError("Moment profile needs >= 2 finite samples.")

    moments = np.zeros(len(ps))
    errors = np.zeros(len(ps))
    for i, p in enumerate(ps):
        powers = x ** p
        m = np.mean(powers)
        moments[i] = m ** (1.0 / p)
        se = np.std(powers, ddof=1) / math.sqrt(x.size)
        errors[i] = (m ** (1.0 / p - 1.0) / p) * se if m > 0 else 0.0

    return moments, errors


def chebyshev_proxy(samples: np.ndarray, delta: float,
                    epsilon: float) -> float:
    """
    eps * log(E[S^q] / delta^q) with q = 1/eps: the moment bound on
    eps * log P(S > delta).
    """
    s = np.abs(np.asarray(samples, dtype=float))
    s = s[np.isfinite(s)]
    if s.size == 0 or delta <= 0 or epsilon <= 0:
        raise ValueError("Chebyshev proxy needs samples, delta > 0, eps > 0.")

    with np.errstate(divide="ignore"):
        log_ratio = np.log(s / delta)
    q = 1.0 / epsilon

    return float(epsilon * (logsumexp(q * log_ratio) - math.log(s.size)))
