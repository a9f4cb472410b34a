"""Pump-rate tuning: unconstrained and SNR-constrained maximization of P_1.

The single-photon probability is a smooth, in practice single-peaked function
of the pump rate, but unimodality is never assumed blindly: a coarse
logarithmic grid locates every local maximum and golden-section search
refines each candidate bracket.  The SNR constraint is handled through the
feasible set on the same grid, with bisection at every feasibility crossing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .config import SourceConfig
from .losses import output_distribution, p1_snr_curve
from .stats import DEFAULT_N_MAX, mandel_q, snr

__all__ = ["OptimizationResult", "optimize_mu", "max_p1_with_snr_floor"]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_MU_RANGE = (1e-4, 2.0)
MIN_COARSE_POINTS = 64


@dataclass(frozen=True)
class OptimizationResult:
    """Outcome of a pump-rate optimization.

    ``boundary`` is "lower"/"upper" when the maximum sits on the search-range
    edge (reported as non-converged).  ``feasible`` is False when an SNR
    target cannot be met anywhere in the range; the remaining fields are NaN
    in that case.  ``constraint_active`` marks a constrained optimum pinned
    to the SNR boundary rather than the unconstrained peak.
    """

    mu_opt: float
    p1_max: float
    snr_at_opt: float
    mandel_q_at_opt: float
    iterations: int
    converged: bool
    boundary: Optional[str] = None
    feasible: bool = True
    snr_target: Optional[float] = None
    constraint_active: bool = False


def _golden_max(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float,
) -> Tuple[float, float, int]:
    """Golden-section maximization on [lo, hi]; returns (x, f(x), evals)."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
        evals += 1
    x = 0.5 * (a + b)
    return x, f(x), evals + 1


def _local_maxima(values: np.ndarray) -> list:
    """Indices of strict-or-plateau local maxima of a sampled curve."""
    idx = []
    n = len(values)
    for i in range(n):
        left = values[i - 1] if i > 0 else -math.inf
        right = values[i + 1] if i < n - 1 else -math.inf
        if values[i] >= left and values[i] >= right:
            idx.append(i)
    return idx


def optimize_mu(
    cfg_template: SourceConfig,
    mu_range: Tuple[float, float] = DEFAULT_MU_RANGE,
    tol: float = 1e-6,
    coarse_points: int = 96,
    n_max: int = DEFAULT_N_MAX,
) -> OptimizationResult:
    """Pump rate that maximizes the end-to-end single-photon probability.

    A logarithmic coarse scan (at least 64 points) brackets every local
    maximum; each bracket is refined by golden-section search to ``tol``
    absolute in mu.  The returned optimum is never below the best coarse-grid
    value.  A maximum sitting on the range boundary is flagged non-converged
    with the boundary named.

    Parameters
    ----------
    cfg_template:
        Source configuration whose ``mu`` field is ignored and swept.
    mu_range:
        Search interval (lo, hi], 0 < lo < hi.
    tol:
        Absolute convergence tolerance in mu (> 0).
    """
    lo, hi = mu_range
    if not (0.0 < lo < hi):
        raise ValueError(f"mu_range must satisfy 0 < lo < hi, got {mu_range}")
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    points = max(int(coarse_points), MIN_COARSE_POINTS)
    grid = np.geomspace(lo, hi, points)

    def p1_of(mu: float) -> float:
        return output_distribution(cfg_template.replace(mu=mu), n_max).p(1)

    grid_p1, _ = p1_snr_curve(cfg_template.replace(mu=lo), grid, n_max)
    best_x = float(grid[int(np.argmax(grid_p1))])
    best_f = float(np.max(grid_p1))
    iterations = points

    candidates = _local_maxima(grid_p1)
    interior_best: Tuple[float, float] = (best_x, best_f)
    for i in candidates:
        if i == 0 or i == points - 1:
            continue
        a, b = float(grid[i - 1]), float(grid[i + 1])
        x, fx, used = _golden_max(p1_of, a, b, tol)
        iterations += used
        if fx > interior_best[1]:
            interior_best = (x, fx)
    mu_opt, p1_max = interior_best

    boundary = None
    converged = True
    edge = int(np.argmax(grid_p1))
    if (edge == 0 or edge == points - 1) and best_f >= p1_max:
        boundary = "lower" if edge == 0 else "upper"
        converged = False
        mu_opt, p1_max = best_x, best_f

    # Guarantee: never below the coarse-grid maximum.
    if best_f > p1_max:
        mu_opt, p1_max = best_x, best_f

    at_opt = output_distribution(cfg_template.replace(mu=mu_opt), n_max)
    return OptimizationResult(
        mu_opt=mu_opt,
        p1_max=at_opt.p(1),
        snr_at_opt=snr(at_opt),
        mandel_q_at_opt=mandel_q(at_opt),
        iterations=iterations,
        converged=converged,
        boundary=boundary,
    )


def _bisect_snr_boundary(
    cfg: SourceConfig,
    lo: float,
    hi: float,
    target: float,
    n_max: int,
    tol: float = 1e-10,
) -> float:
    """Largest mu in [lo, hi] with SNR >= target, given SNR(lo) >= target > SNR(hi)."""
    def snr_of(mu: float) -> float:
        return snr(output_distribution(cfg.replace(mu=mu), n_max))

    a, b = lo, hi
    while (b - a) > tol * max(1.0, b):
        mid = 0.5 * (a + b)
        if snr_of(mid) >= target:
            a = mid
        else:
            b = mid
    return a


def max_p1_with_snr_floor(
    cfg_template: SourceConfig,
    snr_target: float,
    mu_range: Tuple[float, float] = DEFAULT_MU_RANGE,
    tol: float = 1e-6,
    coarse_points: int = 96,
    n_max: int = DEFAULT_N_MAX,
) -> OptimizationResult:
    """Maximize P_1 over mu subject to SNR(mu) >= snr_target.

    SNR decreases with pump rate throughout the modeled regimes; this is
    checked on the coarse grid at every call rather than assumed.  Feasible
    sub-intervals are delimited by bisection at each grid crossing and the
    unconstrained optimizer runs on each one.  An unreachable target yields
    an explicit infeasibility result instead of an exception.
    """
    if snr_target <= 0:
        result = optimize_mu(cfg_template, mu_range, tol, coarse_points, n_max)
        return OptimizationResult(
            **{**result.__dict__, "snr_target": snr_target, "constraint_active": False}
        )
    lo, hi = mu_range
    if not (0.0 < lo < hi):
        raise ValueError(f"mu_range must satisfy 0 < lo < hi, got {mu_range}")
    points = max(int(coarse_points), MIN_COARSE_POINTS)
    grid = np.geomspace(lo, hi, points)
    _, grid_snr = p1_snr_curve(cfg_template.replace(mu=lo), grid, n_max)
    feasible_mask = grid_snr >= snr_target
    iterations = points

    if not feasible_mask.any():
        nan = math.nan
        return OptimizationResult(
            mu_opt=nan, p1_max=nan, snr_at_opt=nan, mandel_q_at_opt=nan,
            iterations=iterations, converged=False, feasible=False,
            snr_target=snr_target,
        )

    # Feasible sub-intervals [start, end] in grid coordinates, boundaries
    # refined by bisection where the mask flips.
    intervals = []
    i = 0
    while i < points:
        if feasible_mask[i]:
            j = i
            while j + 1 < points and feasible_mask[j + 1]:
                j += 1
            a = float(grid[i])
            b = float(grid[j])
            if i > 0:
                a = float(grid[i - 1])  # crossing may lie just below grid[i]
                a = _bisect_snr_boundary_rising(cfg_template, a, float(grid[i]), snr_target, n_max)
            if j + 1 < points:
                b = _bisect_snr_boundary(cfg_template, b, float(grid[j + 1]), snr_target, n_max)
            intervals.append((a, b))
            i = j + 1
        else:
            i += 1

    def p1_of(mu: float) -> float:
        return output_distribution(cfg_template.replace(mu=mu), n_max).p(1)

    best: Optional[OptimizationResult] = None
    for a, b in intervals:
        if b <= a:
            x, fx = a, p1_of(a)
            sub = None
        else:
            sub = optimize_mu(cfg_template, (a, b), tol, coarse_points, n_max)
            x, fx = sub.mu_opt, sub.p1_max
            iterations += sub.iterations
        if best is None or fx > best.p1_max:
            at_opt = output_distribution(cfg_template.replace(mu=x), n_max)
            hit_boundary = sub is not None and sub.boundary == "upper" and b < hi
            best = OptimizationResult(
                mu_opt=x,
                p1_max=at_opt.p(1),
                snr_at_opt=snr(at_opt),
                mandel_q_at_opt=mandel_q(at_opt),
                iterations=iterations,
                converged=True if hit_boundary else (sub.converged if sub else True),
                boundary=None if hit_boundary else (sub.boundary if sub else None),
                feasible=True,
                snr_target=snr_target,
                constraint_active=hit_boundary,
            )
    assert best is not None
    # The constrained optimum must actually satisfy the floor.
    if best.snr_at_opt < snr_target - 1e-6:
        raise RuntimeError(
            f"internal error: constrained optimum violates SNR floor "
            f"({best.snr_at_opt} < {snr_target})"
        )
    return best


def _bisect_snr_boundary_rising(
    cfg: SourceConfig,
    lo: float,
    hi: float,
    target: float,
    n_max: int,
    tol: float = 1e-10,
) -> float:
    """Smallest mu in [lo, hi] with SNR >= target, given SNR(lo) < target <= SNR(hi)."""
    def snr_of(mu: float) -> float:
        return snr(output_distribution(cfg.replace(mu=mu), n_max))

    if snr_of(lo) >= target:
        return lo
    a, b = lo, hi
    while (b - a) > tol * max(1.0, b):
        mid = 0.5 * (a + b)
        if snr_of(mid) >= target:
            b = mid
        else:
            a = mid
    return b
