"""Exact photon-number distributions of the ideal source and figures of merit.

The ideal multiplexed source emits, per clock period, a photon-number
distribution whose vacuum weight is the probability that no pair was created
anywhere in the synchronization interval, while the n >= 1 weights follow the
single-window Poisson statistics conditioned on at least one pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .config import SourceConfig

__all__ = [
    "DEFAULT_N_MAX",
    "TAIL_LIMIT",
    "TruncationError",
    "PhotonDistribution",
    "poisson_pmf",
    "poisson_vector",
    "ideal_distribution",
    "mandel_q",
    "snr",
]

DEFAULT_N_MAX = 30
# A distribution is rejected rather than renormalized when the estimated
# probability mass beyond n_max reaches this bound.
TAIL_LIMIT = 1e-9
_NORM_TOL = 1e-9


class TruncationError(ValueError):
    """Raised when the truncated representation would drop too much mass."""


def poisson_pmf(mu: float, n: int) -> float:
    """Poisson probability of n events at mean mu.

    Evaluated in log space (log-gamma for the factorial) so that large n and
    large mu do not overflow.
    """
    if not (mu >= 0 and math.isfinite(mu)):
        raise ValueError(f"mu must be finite and >= 0, got {mu}")
    if int(n) != n or n < 0:
        raise ValueError(f"n must be an integer >= 0, got {n}")
    n = int(n)
    if mu == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(mu) - mu - math.lgamma(n + 1))


def poisson_vector(mu: float, n_max: int) -> np.ndarray:
    """Poisson pmf for n = 0..n_max as a vector, log-space evaluation."""
    if not (mu >= 0 and math.isfinite(mu)):
        raise ValueError(f"mu must be finite and >= 0, got {mu}")
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    n = np.arange(n_max + 1)
    if mu == 0.0:
        out = np.zeros(n_max + 1)
        out[0] = 1.0
        return out
    return np.exp(n * math.log(mu) - mu - _lgamma_cache(n_max + 1))


_LGAMMA_TABLE = np.zeros(0)


def _lgamma_cache(size: int) -> np.ndarray:
    """lgamma(n+1) for n = 0..size-1, grown on demand."""
    global _LGAMMA_TABLE
    if _LGAMMA_TABLE.size < size:
        _LGAMMA_TABLE = np.array([math.lgamma(i + 1) for i in range(max(size, 64))])
    return _LGAMMA_TABLE[:size]


@dataclass(frozen=True)
class PhotonDistribution:
    """Truncated photon-number distribution of the synchronized output window.

    ``probs[n]`` is the probability of n photons, for n = 0..n_max.
    ``tail_mass`` is the residual probability beyond the truncation bound; it
    must stay below :data:`TAIL_LIMIT` or construction fails loudly instead of
    renormalizing, which would silently bias multi-photon figures of merit.
    """

    probs: np.ndarray
    n_max: int
    tail_mass: float = 0.0
    meta: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.size != self.n_max + 1:
            raise ValueError(f"probs must have length n_max+1 = {self.n_max + 1}, got {probs.size}")
        if np.any(probs < -1e-12) or np.any(probs > 1.0 + 1e-12):
            raise ValueError("probabilities must lie in [0, 1]")
        if not (self.tail_mass >= -1e-15):
            raise ValueError(f"tail_mass must be >= 0, got {self.tail_mass}")
        if self.tail_mass >= TAIL_LIMIT:
            raise TruncationError(
                f"tail mass {self.tail_mass:.3e} beyond n_max={self.n_max} exceeds "
                f"{TAIL_LIMIT:.0e}; increase n_max"
            )
        total = float(probs.sum()) + self.tail_mass
        if abs(total - 1.0) > _NORM_TOL:
            raise ValueError(f"distribution does not normalize: sum={total!r}")
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))

    def p(self, n: int) -> float:
        """Probability of exactly n photons (0 beyond the truncation bound)."""
        return float(self.probs[n]) if 0 <= n <= self.n_max else 0.0

    def p_ge(self, k: int) -> float:
        """Probability of k or more photons, tail mass included."""
        if k <= 0:
            return 1.0
        if k > self.n_max:
            return self.tail_mass
        return float(self.probs[k:].sum()) + self.tail_mass

    def mean(self) -> float:
        n = np.arange(self.n_max + 1)
        return float(n @ self.probs)

    def variance(self) -> float:
        n = np.arange(self.n_max + 1)
        m1 = float(n @ self.probs)
        m2 = float((n * n) @ self.probs)
        return m2 - m1 * m1

    def with_meta(self, **entries) -> "PhotonDistribution":
        merged = dict(self.meta)
        merged.update(entries)
        return PhotonDistribution(self.probs, self.n_max, self.tail_mass, merged)


def _vacuum(n_max: int, **meta) -> PhotonDistribution:
    probs = np.zeros(n_max + 1)
    probs[0] = 1.0
    return PhotonDistribution(probs, n_max, 0.0, meta)


def ideal_distribution(cfg: SourceConfig, n_max: int = DEFAULT_N_MAX) -> PhotonDistribution:
    """Photon-number distribution of the lossless multiplexed source.

    The vacuum weight is the no-pair probability over the whole
    synchronization interval, ``P_0(mu_total)``; each n >= 1 weight is the
    single-window Poisson term renormalized to exclude vacuum and scaled by
    the herald probability ``1 - P_0(mu_total)``.

    Loss fields of ``cfg`` are ignored: this is the zero-imperfection limit.

    Parameters
    ----------
    cfg:
        Source configuration; only ``m`` and ``mu`` are used.
    n_max:
        Truncation bound (>= 2).
    """
    if n_max < 2:
        raise ValueError(f"n_max must be >= 2, got {n_max}")
    mu = cfg.mu
    if mu == 0.0:
        # Limit of the n >= 1 branch as mu -> 0: deterministic vacuum.
        return _vacuum(n_max)
    pois = poisson_vector(mu, n_max)
    herald_prob = -math.expm1(-cfg.mu_total)  # 1 - P_0(mu_total)
    nonvacuum = -math.expm1(-mu)              # 1 - P_0(mu)
    probs = np.empty(n_max + 1)
    probs[0] = math.exp(-cfg.mu_total)
    probs[1:] = herald_prob * pois[1:] / nonvacuum
    tail = herald_prob * max(0.0, nonvacuum - float(pois[1:].sum())) / nonvacuum
    return PhotonDistribution(probs, n_max, tail)


def mandel_q(dist: PhotonDistribution) -> float:
    """Mandel parameter (Var(n) - <n>) / <n> of a photon-number distribution.

    Zero for Poissonian light, -1 for a photon-number state; negative values
    indicate sub-poissonian statistics.
    """
    mean = dist.mean()
    if mean <= 0.0:
        raise ValueError("Mandel Q is undefined for the vacuum state (<n> = 0)")
    return (dist.variance() - mean) / mean


def snr(dist: PhotonDistribution) -> float:
    """Single-photon to multi-photon probability ratio, P_1 / P_>=2.

    The multi-photon term includes the truncation tail.  A distribution with
    no multi-photon component at all yields positive infinity.
    """
    p_multi = 1.0 - dist.p(0) - dist.p(1)
    # 1 - p0 - p1 already includes tail_mass since probs sum to 1 - tail.
    if p_multi <= 0.0:
        return math.inf
    return dist.p(1) / p_multi
