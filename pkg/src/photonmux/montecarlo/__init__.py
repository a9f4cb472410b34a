"""Independent event-level Monte Carlo simulation of the source.

Every trial draws pair counts per detection window, detects each window's
idlers with the heralding transmission, fires dark counts, routes the first
triggered window (or the final window as bypass) to the output and thins the
routed photons through the signal branch.  The histogram over surviving
counts is the brute-force oracle for every analytic distribution.

Two interchangeable kernels exist: a compiled Cython extension, probed at
import, and a vectorized numpy fallback used when the extension is missing
(the PHOTONMUX_BACKEND environment variable forces either).  Both consume
the identical Philox stream, so their histograms are bit-identical.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config import SourceConfig
from ..stats import PhotonDistribution
from . import _numpy_backend
from ._tables import PAIR_COUNT_CAP, build_tables, philox_at_trial, slots_per_trial

try:
    from . import _kernel
except ImportError:  # pure-Python install
    _kernel = None

__all__ = [
    "McConfig",
    "McHistogram",
    "CompareReport",
    "simulate",
    "compare",
    "available_backends",
    "default_backend",
]

MAX_TRIALS = 1 << 40
_CHUNK_WORD_TARGET = 1 << 22


def available_backends() -> tuple:
    return ("cython", "numpy") if _kernel is not None else ("numpy",)


def default_backend() -> str:
    """Backend selected at import time, honoring PHOTONMUX_BACKEND."""
    forced = os.environ.get("PHOTONMUX_BACKEND", "auto").lower()
    if forced in ("cython", "numpy"):
        if forced == "cython" and _kernel is None:
            raise RuntimeError("PHOTONMUX_BACKEND=cython but the compiled kernel is missing")
        return forced
    return "cython" if _kernel is not None else "numpy"


@dataclass(frozen=True)
class McConfig:
    """Simulation size and reproducibility contract.

    The histogram depends only on (trials, seed) and the source
    configuration; ``shards`` splits the trial range into independent
    contiguous blocks executed in parallel and never changes the result.
    """

    trials: int
    seed: int = 0
    shards: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.trials:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.trials > MAX_TRIALS:
            raise ValueError(f"trials={self.trials} exceeds the supported maximum 2**40")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.shards < 1:
            raise ValueError(f"shards must be >= 1, got {self.shards}")


@dataclass(frozen=True)
class McHistogram:
    """Outcome counts of one simulation run."""

    counts: np.ndarray
    trials: int
    source: SourceConfig
    mc: McConfig
    backend: str = ""

    def __post_init__(self) -> None:
        counts = np.array(self.counts, dtype=np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        if int(counts.sum()) != self.trials:
            raise ValueError("histogram counts must sum to the trial count")

    @property
    def n_max(self) -> int:
        return self.counts.size - 1

    def frequencies(self) -> np.ndarray:
        return self.counts / self.trials

    def rows(self):
        """(k, count, frequency) triples for tabular serialization."""
        freq = self.frequencies()
        return [(int(k), int(self.counts[k]), float(freq[k])) for k in range(self.counts.size)]


def _simulate_range(tables, seed: int, start: int, stop: int, backend: str) -> np.ndarray:
    w = tables.n_windows
    slots = slots_per_trial(w)
    rng = philox_at_trial(seed, start, w)
    chunk = max(1, _CHUNK_WORD_TARGET // slots)
    counts = np.zeros(PAIR_COUNT_CAP + 1, dtype=np.int64)
    runner = _kernel.run_chunk if backend == "cython" else _numpy_backend.run_chunk
    remaining = stop - start
    while remaining > 0:
        t = min(chunk, remaining)
        uniforms = rng.random((t, slots))
        runner(uniforms, tables, counts)
        remaining -= t
    return counts


def simulate(cfg: SourceConfig, mc: McConfig, backend: Optional[str] = None) -> McHistogram:
    """Run the event-level simulation.

    Per trial: (1) pair count per window ~ Poisson(mu); (2) the window
    heralds with probability 1 - (1-e_h)^pairs, the compound chance that at
    least one of its idlers is detected; (3) a dark count fires per window
    with probability P_dark; (4) the first window with any trigger is routed
    to the output, or the final window if none triggered; (5) each photon of
    the routed window survives with the end-to-end signal transmission;
    (6) the surviving count is recorded.

    Deterministic for a fixed (cfg, trials, seed): shard count, chunking and
    backend choice never alter the histogram.
    """
    chosen = backend or default_backend()
    if chosen not in available_backends():
        raise ValueError(f"unknown or unavailable backend {chosen!r}")
    tables = build_tables(cfg)
    shards = min(mc.shards, mc.trials)
    base, extra = divmod(mc.trials, shards)
    ranges = []
    start = 0
    for i in range(shards):
        size = base + (1 if i < extra else 0)
        ranges.append((start, start + size))
        start += size

    if shards == 1:
        counts = _simulate_range(tables, mc.seed, 0, mc.trials, chosen)
    else:
        counts = np.zeros(PAIR_COUNT_CAP + 1, dtype=np.int64)
        with ThreadPoolExecutor(max_workers=min(shards, os.cpu_count() or 1)) as pool:
            futures = [
                pool.submit(_simulate_range, tables, mc.seed, lo, hi, chosen)
                for lo, hi in ranges
            ]
            for future in futures:
                counts += future.result()

    top = int(np.nonzero(counts)[0].max()) if counts.any() else 0
    trimmed = counts[: max(top + 1, 31)]
    return McHistogram(trimmed, mc.trials, cfg, mc, chosen)


@dataclass(frozen=True)
class CompareReport:
    """Analytic-versus-sampled agreement summary.

    Per-bin z-scores are computed after merging the sparse upper bins into
    one tail group (expected count at least ``min_expected``), the usual
    guard against meaningless normal approximations on near-empty bins.
    """

    tv_distance: float
    tv_limit: float
    max_abs_z: float
    z_limit: float
    z_scores: np.ndarray
    tail_start: int
    passed: bool

    def lines(self) -> list:
        state = "PASS" if self.passed else "FAIL"
        return [
            f"tv_distance = {self.tv_distance:.6e} (limit {self.tv_limit:.6e})",
            f"max |z| = {self.max_abs_z:.3f} over {self.z_scores.size} bins "
            f"(tail merged from k={self.tail_start}, limit {self.z_limit})",
            f"agreement: {state}",
        ]


def compare(
    analytic: PhotonDistribution,
    hist: McHistogram,
    z_limit: float = 4.0,
    tv_factor: float = 3.0,
    min_expected: float = 10.0,
) -> CompareReport:
    """Check a sampled histogram against an analytic distribution.

    Passes when the total-variation distance stays below
    ``tv_factor * sqrt(n_max / trials)`` and every merged-bin z-score stays
    within ``z_limit``.
    """
    cfg = analytic.meta.get("config")
    if cfg is not None and cfg != hist.source:
        raise ValueError("analytic distribution and histogram were computed for different configs")

    trials = hist.trials
    size = max(analytic.n_max + 1, hist.counts.size)
    probs = np.zeros(size)
    probs[: analytic.n_max + 1] = analytic.probs
    counts = np.zeros(size, dtype=np.int64)
    counts[: hist.counts.size] = hist.counts

    freq = counts / trials
    tv = 0.5 * (float(np.abs(freq - probs).sum()) + analytic.tail_mass)
    tv_limit = tv_factor * math.sqrt(analytic.n_max / trials)

    expected = probs * trials
    tail_expected = analytic.tail_mass * trials
    # suffix[i] = expected mass in bins i and above
    suffix = np.append(np.cumsum(expected[::-1])[::-1], 0.0)
    cutoff = size
    while cutoff > 1 and suffix[cutoff] + tail_expected < min_expected:
        cutoff -= 1
    head_p = probs[:cutoff]
    head_c = counts[:cutoff].astype(float)
    tail_p = float(probs[cutoff:].sum()) + analytic.tail_mass
    tail_c = float(counts[cutoff:].sum())
    group_p = np.append(head_p, tail_p)
    group_c = np.append(head_c, tail_c)
    var = trials * group_p * (1.0 - group_p)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(var > 0, (group_c - trials * group_p) / np.sqrt(np.where(var > 0, var, 1.0)), 0.0)
    # A bin that the analytic model forbids but the sampler populated is an
    # unconditional failure.
    impossible = (group_p == 0) & (group_c > 0)
    max_abs_z = math.inf if impossible.any() else float(np.abs(z).max())

    passed = tv <= tv_limit and max_abs_z <= z_limit
    return CompareReport(
        tv_distance=tv,
        tv_limit=tv_limit,
        max_abs_z=max_abs_z,
        z_limit=z_limit,
        z_scores=z,
        tail_start=cutoff,
        passed=passed,
    )
