"""Self-check suite: model invariants plus Monte Carlo agreement.

Run through the CLI ``validate`` subcommand.  Each check returns a
(name, passed, detail) record; the suite passes only if every check does.
The checks cover the algebraic reductions of the loss chain, normalization,
monotonicity trends, optimizer soundness against an exhaustive grid, clock
arithmetic, and statistical agreement between the analytic chain and the
event-level simulator over a grid of configurations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .config import SourceConfig
from .losses import (
    heralded_distribution,
    output_distribution,
    p1_snr_curve,
    with_dark_counts,
)
from .montecarlo import McConfig, compare, simulate
from .optimize import optimize_mu
from .stats import ideal_distribution, poisson_vector

__all__ = ["Check", "ValidationReport", "run_validation", "AGREEMENT_GRID"]

# Configuration grid for the analytic-versus-sampled agreement check:
# (m, mu, e_sw_db) with e_h = 0.85, e_s = 0.9, plus one dark-count point.
AGREEMENT_GRID: Tuple[Tuple[int, float, float], ...] = tuple(
    (m, mu, il)
    for m in (0, 2, 4)
    for mu in (0.05, 0.1, 0.5)
    for il in (0.5, 1.0)
)
DARK_POINT = SourceConfig(m=4, mu=0.1, e_h=0.85, e_s=0.9, e_sw_db=0.5, r_dark=5.0e6)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    checks: Tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> List[str]:
        out = [f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}" for c in self.checks]
        out.append(f"validation: {'PASS' if self.passed else 'FAIL'} "
                   f"({sum(c.passed for c in self.checks)}/{len(self.checks)} checks)")
        return out


def _check_lossless_reduction(rng: np.random.Generator) -> Check:
    worst = 0.0
    for _ in range(100):
        m = int(rng.integers(0, 9))
        mu = float(rng.uniform(1e-4, 1.5))
        cfg = SourceConfig.lossless(m=m, mu=mu)
        chain = output_distribution(cfg)
        ideal = ideal_distribution(cfg)
        worst = max(worst, float(np.abs(chain.probs - ideal.probs).max()))
    return Check("lossless chain reduction", worst < 1e-12, f"max deviation {worst:.3e}")


def _check_single_window_poisson(rng: np.random.Generator) -> Check:
    worst = 0.0
    for _ in range(100):
        mu = float(rng.uniform(1e-4, 1.5))
        e_h = float(rng.uniform(0.05, 1.0))
        e_s = float(rng.uniform(0.3, 1.0))
        il = float(rng.uniform(0.0, 2.0))
        r_dark = float(rng.choice([0.0, 1e5, 5e6]))
        cfg = SourceConfig(m=0, mu=mu, e_h=e_h, e_s=e_s, e_sw_db=il, r_dark=r_dark)
        out = output_distribution(cfg)
        thinned = poisson_vector(mu * cfg.e_s_total, out.n_max)
        worst = max(worst, float(np.abs(out.probs - thinned).max()))
    return Check("single-window Poisson reduction", worst < 1e-12, f"max deviation {worst:.3e}")


def _check_denominator_closed_forms(rng: np.random.Generator) -> Check:
    worst = 0.0
    n = np.arange(61)
    for _ in range(200):
        mu = float(rng.uniform(1e-4, 2.0))
        e_h = float(rng.uniform(0.05, 1.0))
        pois = poisson_vector(mu, 60)
        miss = (1.0 - e_h) ** n
        explicit_click = float((pois * (1.0 - miss)).sum())
        explicit_miss = float((pois * miss).sum())
        worst = max(
            worst,
            abs(explicit_click - (-math.expm1(-mu * e_h))),
            abs(explicit_miss - math.exp(-mu * e_h)),
        )
    return Check("herald-branch closed forms", worst < 1e-10, f"max deviation {worst:.3e}")


def _check_normalization(rng: np.random.Generator) -> Check:
    worst = 0.0
    for _ in range(100):
        m = int(rng.integers(0, 13))
        mu = float(rng.uniform(1e-6, 2.0))
        cfg = SourceConfig(
            m=m, mu=mu,
            e_h=float(rng.uniform(0.0, 1.0)),
            e_s=float(rng.uniform(0.0, 1.0)),
            e_sw_db=float(rng.uniform(0.0, 2.0)),
            r_dark=float(rng.choice([0.0, 1e4, 5e6])),
        )
        dist = output_distribution(cfg, n_max=40)
        worst = max(worst, abs(float(dist.probs.sum()) + dist.tail_mass - 1.0))
    return Check("chain normalization", worst < 1e-9, f"max |sum - 1| {worst:.3e}")


def _check_monotonic_trends() -> Check:
    il_grid = np.linspace(0.0, 2.0, 21)
    ok = True
    details = []
    for mu in (0.1, 0.2):
        for m in (0, 2, 4):
            p1 = [output_distribution(SourceConfig(m=m, mu=mu, e_h=0.85, e_s=0.9,
                                                   e_sw_db=float(il))).p(1)
                  for il in il_grid]
            if not all(a >= b - 1e-12 for a, b in zip(p1, p1[1:])):
                ok = False
                details.append(f"P1 not non-increasing in IL at mu={mu}, m={m}")
    cfg = SourceConfig(m=4, mu=0.05, e_h=0.85, e_s=0.9, e_sw_db=0.5)
    for name in ("e_s", "e_h"):
        vals = np.linspace(0.2, 1.0, 17)
        p1 = [output_distribution(cfg.replace(**{name: float(v)})).p(1) for v in vals]
        if not all(b >= a - 1e-12 for a, b in zip(p1, p1[1:])):
            ok = False
            details.append(f"P1 not non-decreasing in {name}")
    return Check("loss monotonicity trends", ok, "; ".join(details) or "all trends hold")


def _check_dark_count_mixture() -> Check:
    """Factored dark-count mixture equals the literal sum over window counts."""
    worst = 0.0
    for m, mu, p_dark_target in ((2, 0.1, 0.01), (4, 0.3, 0.05), (6, 0.05, 0.002)):
        r_dark = -math.log1p(-p_dark_target) / 2e-9
        cfg = SourceConfig(m=m, mu=mu, e_h=0.85, e_s=0.9, e_sw_db=0.5, r_dark=r_dark)
        mixed = with_dark_counts(cfg)
        literal = np.zeros(mixed.n_max + 1)
        w = cfg.n_windows
        for length in range(1, w + 1):
            weight = (1 - cfg.p_dark) ** (length - 1) * cfg.p_dark
            literal += weight * heralded_distribution(cfg, length).probs
        literal += (1 - cfg.p_dark) ** w * heralded_distribution(cfg, w).probs
        worst = max(worst, float(np.abs(mixed.probs - literal).max()))
    return Check("dark-count mixture", worst < 1e-12, f"max deviation {worst:.3e}")


def _check_optimizer(rng: np.random.Generator) -> Check:
    ok = True
    details = []
    for _ in range(3):
        cfg = SourceConfig(
            m=int(rng.integers(0, 6)),
            mu=1e-4,
            e_h=float(rng.uniform(0.5, 1.0)),
            e_s=float(rng.uniform(0.5, 1.0)),
            e_sw_db=float(rng.uniform(0.1, 1.5)),
        )
        result = optimize_mu(cfg)
        grid = np.geomspace(1e-4, 2.0, 20001)
        p1, _ = p1_snr_curve(cfg, grid)
        if result.p1_max + 1e-10 < float(p1.max()):
            ok = False
            details.append(f"optimizer below grid optimum for {cfg}")
    mu_opts = [optimize_mu(SourceConfig.lossless(m=m, mu=1e-3)).mu_opt for m in range(0, 9)]
    if not all(a > b for a, b in zip(mu_opts, mu_opts[1:])):
        ok = False
        details.append("ideal mu_opt not strictly decreasing in m")
    return Check("optimizer soundness", ok, "; ".join(details) or "grid-consistent, mu_opt decreasing")


def _check_clock() -> Check:
    cfg = SourceConfig(m=4, delta_t0_ns=2.0, mu=0.1)
    ok = cfg.period_ns == 32.0 and abs(cfg.clock_hz - 31.25e6) < 1e-6
    return Check("clock arithmetic", ok, f"period {cfg.period_ns} ns, {cfg.clock_hz / 1e6:.4f} MHz")


def _check_agreement(trials: int, seed: int, shards: int, backend: Optional[str]) -> List[Check]:
    checks = []
    worst_tv = 0.0
    worst_z = 0.0
    all_pass = True
    configs = [SourceConfig(m=m, mu=mu, e_h=0.85, e_s=0.9, e_sw_db=il)
               for m, mu, il in AGREEMENT_GRID]
    configs.append(DARK_POINT)
    for cfg in configs:
        hist = simulate(cfg, McConfig(trials=trials, seed=seed, shards=shards), backend)
        report = compare(output_distribution(cfg), hist)
        worst_tv = max(worst_tv, report.tv_distance / report.tv_limit)
        worst_z = max(worst_z, report.max_abs_z)
        all_pass = all_pass and report.passed
    checks.append(Check(
        f"Monte Carlo agreement ({len(configs)} configs x {trials} trials)",
        all_pass,
        f"worst TV ratio {worst_tv:.3f}, worst |z| {worst_z:.3f}",
    ))
    return checks


def run_validation(
    trials: int = 1_000_000,
    seed: int = 42,
    shards: int = 1,
    backend: Optional[str] = None,
    fast: bool = False,
) -> ValidationReport:
    """Run the whole suite; ``fast`` shrinks the simulation size only."""
    rng = np.random.default_rng(20240915)
    checks = [
        _check_lossless_reduction(rng),
        _check_single_window_poisson(rng),
        _check_denominator_closed_forms(rng),
        _check_normalization(rng),
        _check_dark_count_mixture(),
        _check_monotonic_trends(),
        _check_optimizer(rng),
        _check_clock(),
    ]
    mc_trials = min(trials, 50_000) if fast else trials
    checks.extend(_check_agreement(mc_trials, seed, shards, backend))
    return ValidationReport(tuple(checks))
