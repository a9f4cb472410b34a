"""Sampling tables and the deterministic random-stream layout.

Both simulator backends consume the same Philox stream, keyed by the seed
alone.  Trial t owns the words [t*S, (t+1)*S) of that stream, where S is the
per-trial slot count (3 per window plus one survival slot) rounded up to a
multiple of 4 so that any trial boundary is also a Philox block boundary.
Histograms therefore depend only on (config, trials, seed), never on shard
count, chunking or backend.

Per-trial slot order: pair-count uniforms for windows 0..W-1, then herald
uniforms, then dark-count uniforms, then one survival uniform, then padding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..config import SourceConfig
from ..stats import _lgamma_cache

__all__ = ["SamplingTables", "build_tables", "slots_per_trial", "philox_at_trial"]

# Hard cap on the per-window pair count; the inverse-CDF saturates here.  At
# the largest supported pump rates the probability mass beyond the cap is far
# below 2^-53 per draw.
PAIR_COUNT_CAP = 128


def slots_per_trial(n_windows: int) -> int:
    """Stream words reserved per trial (padded to a Philox block boundary)."""
    raw = 3 * n_windows + 1
    return (raw + 3) & ~3


def philox_at_trial(seed: int, trial_index: int, n_windows: int) -> np.random.Generator:
    """Generator positioned at the first stream word of ``trial_index``."""
    bitgen = np.random.Philox(key=np.uint64(seed))
    offset_words = trial_index * slots_per_trial(n_windows)
    if offset_words % 4:
        raise AssertionError("trial boundaries must be block aligned")
    bitgen.advance(offset_words // 4)
    return np.random.Generator(bitgen)


@dataclass(frozen=True)
class SamplingTables:
    """Inverse-CDF tables shared by the compiled and the numpy backend."""

    pair_cdf: np.ndarray       # cumulative Poisson(mu), length cap+1
    herald_prob: np.ndarray    # P(>=1 idler click | n pairs), length cap+1
    survival_cdf: np.ndarray   # (cap+1, cap+2) cumulative Binomial(n, e_s_total)
    p_dark: float
    n_windows: int


def build_tables(cfg: SourceConfig) -> SamplingTables:
    mu = cfg.mu
    cap = PAIR_COUNT_CAP
    n = np.arange(cap + 1)
    if mu == 0.0:
        pmf = np.zeros(cap + 1)
        pmf[0] = 1.0
    else:
        pmf = np.exp(n * math.log(mu) - mu - _lgamma_cache(cap + 1))
    cum = np.cumsum(pmf)
    if 1.0 - float(cum[-2]) > 1e-12:
        raise ValueError(f"pump rate mu={mu} too large for the pair-count cap {cap}")
    pair_cdf = np.minimum(cum, 1.0)
    pair_cdf[-1] = 1.0

    herald_prob = 1.0 - (1.0 - cfg.e_h) ** n

    p = cfg.e_s_total
    k = np.arange(cap + 1)
    if p == 0.0:
        binom_pmf = np.zeros((cap + 1, cap + 1))
        binom_pmf[:, 0] = 1.0
    elif p == 1.0:
        binom_pmf = np.eye(cap + 1)
    else:
        lg = _lgamma_cache(cap + 1)
        log_comb = lg[:, None] - lg[None, :] - lg[np.maximum(n[:, None] - k[None, :], 0)]
        log_pmf = log_comb + k[None, :] * math.log(p) + (n[:, None] - k[None, :]) * math.log1p(-p)
        binom_pmf = np.exp(log_pmf)
        binom_pmf[k[None, :] > n[:, None]] = 0.0
    survival_cdf = np.minimum(np.cumsum(binom_pmf, axis=1), 1.0)
    # Rows are exact at and beyond their own n, so the inversion can never
    # yield more survivors than input photons.
    survival_cdf[k[None, :] >= n[:, None]] = 1.0

    return SamplingTables(
        pair_cdf=np.ascontiguousarray(pair_cdf),
        herald_prob=np.ascontiguousarray(herald_prob),
        survival_cdf=np.ascontiguousarray(survival_cdf),
        p_dark=cfg.p_dark,
        n_windows=cfg.n_windows,
    )
