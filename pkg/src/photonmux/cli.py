"""Command-line interface.

Subcommands: ``dist`` (output distribution), ``optimize`` (pump tuning),
``sweep`` (custom one-axis sweep), ``figure`` (named figure tables),
``montecarlo`` (event-level simulation), ``validate`` (invariant and
agreement suite).  Source parameters come from a line-oriented
``key = value`` config file and/or per-key flags; flags win.  All file
output is written atomically and carries a config echo, so identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ._version import __version__
from .config import SourceConfig
from .losses import output_distribution
from .montecarlo import McConfig, compare, simulate
from .optimize import max_p1_with_snr_floor, optimize_mu
from .stats import DEFAULT_N_MAX
from .sweeps import (
    clock_report,
    figure2,
    figure3,
    figure4,
    figure5,
    gnuplot_commands,
    sweep_axis,
)
from .validate import run_validation

__all__ = ["main", "parse_source_config", "ConfigError"]

OUTDIR_ENV = "PHOTONMUX_OUTDIR"

_KEY_TYPES = {
    "m": int,
    "delta_t0_ns": float,
    "mu": float,
    "herald_rate_r": float,
    "e_h": float,
    "e_s": float,
    "e_sw_db": float,
    "r_dark": float,
}


class ConfigError(ValueError):
    """Configuration file or override rejected; message carries key and line."""


def _convert(key: str, text: str, where: str):
    try:
        return _KEY_TYPES[key](text)
    except ValueError:
        raise ConfigError(f"{where}: value for {key!r} is not a number: {text!r}") from None


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, float]:
    """Parse ``key = value`` lines; '#' starts a comment."""
    values: Dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEY_TYPES:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = _convert(key, value, f"{source}:{lineno}")
    return values


def parse_source_config(path: Optional[str], overrides: Dict[str, float]) -> SourceConfig:
    """Build and validate a SourceConfig from a file plus flag overrides."""
    values: Dict[str, float] = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                text = handle.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
        values.update(parse_config_text(text, source=path))
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return SourceConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


@dataclass
class RunConfig:
    """Validated invocation: subcommand, source parameters and output sink."""

    subcommand: str
    source: Optional[SourceConfig]
    output_path: Optional[str]
    output_format: str
    options: argparse.Namespace


def _add_source_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="key = value config file")
    for key, kind in _KEY_TYPES.items():
        parser.add_argument(f"--{key}", type=kind, default=None,
                            help=f"override {key} (see config docs)")


def _add_output_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-o", "--output", metavar="PATH",
                        help=f"output file (default stdout); relative paths land in ${OUTDIR_ENV} when set")
    parser.add_argument("--format", choices=("tabular", "structured"), default="tabular",
                        help="delimiter-separated text or self-describing JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photonmux",
        description="Photon statistics of a temporally multiplexed heralded single-photon source",
    )
    parser.add_argument("--version", action="version", version=f"photonmux {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_dist = sub.add_parser("dist", help="end-to-end photon-number distribution")
    _add_source_flags(p_dist)
    _add_output_flags(p_dist)
    p_dist.add_argument("--n-max", type=int, default=DEFAULT_N_MAX)

    p_opt = sub.add_parser("optimize", help="pump rate maximizing the single-photon probability")
    _add_source_flags(p_opt)
    _add_output_flags(p_opt)
    p_opt.add_argument("--mu-min", type=float, default=1e-4)
    p_opt.add_argument("--mu-max", type=float, default=2.0)
    p_opt.add_argument("--tol", type=float, default=1e-6)
    p_opt.add_argument("--snr-target", type=float, default=None,
                       help="maximize P1 subject to SNR >= target")

    p_sweep = sub.add_parser("sweep", help="one-axis sweep around the base configuration")
    _add_source_flags(p_sweep)
    _add_output_flags(p_sweep)
    p_sweep.add_argument("--axis", choices=("mu", "e_sw_db"), required=True)
    p_sweep.add_argument("--min", type=float, required=True)
    p_sweep.add_argument("--max", type=float, required=True)
    p_sweep.add_argument("--points", type=int, default=50)
    p_sweep.add_argument("--log", action="store_true", help="log-spaced grid")

    p_fig = sub.add_parser("figure", help="reproduce a named figure as a data table")
    _add_output_flags(p_fig)
    p_fig.add_argument("--id", choices=("fig2", "fig3", "fig4", "fig5"), required=True)
    p_fig.add_argument("--gnuplot", metavar="PATH",
                       help="also emit a gnuplot script next to the table")

    p_mc = sub.add_parser("montecarlo", help="event-level simulation histogram")
    _add_source_flags(p_mc)
    _add_output_flags(p_mc)
    p_mc.add_argument("--trials", type=float, default=1e6)
    p_mc.add_argument("--seed", type=int, default=0)
    p_mc.add_argument("--shards", type=int, default=1)
    p_mc.add_argument("--backend", choices=("cython", "numpy"), default=None)
    p_mc.add_argument("--compare", action="store_true",
                      help="append agreement report against the analytic distribution")

    p_val = sub.add_parser("validate", help="run the invariant and MC agreement suite")
    p_val.add_argument("--trials", type=float, default=1e6)
    p_val.add_argument("--seed", type=int, default=42)
    p_val.add_argument("--shards", type=int, default=1)
    p_val.add_argument("--backend", choices=("cython", "numpy"), default=None)
    p_val.add_argument("--fast", action="store_true", help="small simulation for smoke testing")

    return parser


def _resolve_output(path: Optional[str]) -> Optional[str]:
    if path is None:
        return None
    outdir = os.environ.get(OUTDIR_ENV)
    if outdir and not os.path.isabs(path):
        return os.path.join(outdir, path)
    return path


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".photonmux-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        _write_atomic(path, text)


def _config_echo_lines(cfg: SourceConfig) -> list:
    lines = [f"# tool = photonmux {__version__}"]
    lines += [f"# {key} = {value!r}" for key, value in sorted(cfg.as_dict().items())]
    return lines


def _gather_overrides(ns: argparse.Namespace) -> Dict[str, float]:
    return {key: getattr(ns, key, None) for key in _KEY_TYPES}


def run(ns: argparse.Namespace) -> int:
    """Dispatch one parsed invocation; returns the process exit status."""
    if ns.subcommand == "validate":
        report = run_validation(
            trials=int(ns.trials), seed=ns.seed, shards=ns.shards,
            backend=ns.backend, fast=ns.fast,
        )
        for line in report.lines():
            print(line)
        return 0 if report.passed else 1

    if ns.subcommand == "figure":
        table = {
            "fig2": figure2,
            "fig3": figure3,
            "fig4": figure4,
            "fig5": figure5,
        }[ns.id]()
        path = _resolve_output(ns.output)
        _emit(table.to_csv() if ns.format == "tabular" else table.to_json(), path)
        if ns.gnuplot:
            x = {"fig2": "m", "fig3": "mu", "fig4": "e_sw_db", "fig5": "snr_target"}[ns.id]
            script = gnuplot_commands(table, path or "table.csv", x=x, y="p1")
            _write_atomic(_resolve_output(ns.gnuplot), script)
        return 0

    cfg = parse_source_config(ns.config, _gather_overrides(ns))
    path = _resolve_output(ns.output)

    if ns.subcommand == "dist":
        dist = output_distribution(cfg, ns.n_max)
        if ns.format == "structured":
            doc = {
                "format": "photonmux-dist",
                "tool": f"photonmux {__version__}",
                "config": cfg.as_dict(),
                "n_max": dist.n_max,
                "tail_mass": dist.tail_mass,
                "probs": dist.probs.tolist(),
            }
            _emit(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n", path)
        else:
            lines = _config_echo_lines(cfg)
            lines.append("n,probability")
            lines += [f"{n},{float(p)!r}" for n, p in enumerate(dist.probs)]
            _emit("\n".join(lines) + "\n", path)
        return 0

    if ns.subcommand == "optimize":
        mu_range = (ns.mu_min, ns.mu_max)
        if ns.snr_target is None:
            result = optimize_mu(cfg, mu_range, ns.tol)
        else:
            result = max_p1_with_snr_floor(cfg, ns.snr_target, mu_range, ns.tol)
        clock = clock_report(cfg)
        doc = {
            "format": "photonmux-optimize",
            "tool": f"photonmux {__version__}",
            "config": cfg.as_dict(),
            "clock_hz": clock.frequency_hz,
            "result": {
                "mu_opt": result.mu_opt,
                "p1_max": result.p1_max,
                "snr_at_opt": result.snr_at_opt,
                "mandel_q_at_opt": result.mandel_q_at_opt,
                "iterations": result.iterations,
                "converged": result.converged,
                "boundary": result.boundary,
                "feasible": result.feasible,
                "snr_target": result.snr_target,
                "constraint_active": result.constraint_active,
            },
        }
        if ns.format == "structured":
            _emit(json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=True) + "\n", path)
        else:
            lines = _config_echo_lines(cfg) + ["key,value"]
            lines += [f"{k},{v!r}" for k, v in sorted(doc["result"].items())]
            _emit("\n".join(lines) + "\n", path)
        return 0

    if ns.subcommand == "sweep":
        if ns.points < 1:
            raise ConfigError("--points must be >= 1")
        if ns.log:
            if ns.min <= 0:
                raise ConfigError("--log requires --min > 0")
            values = np.geomspace(ns.min, ns.max, ns.points)
        else:
            values = np.linspace(ns.min, ns.max, ns.points)
        table = sweep_axis(cfg, ns.axis, values)
        _emit(table.to_csv() if ns.format == "tabular" else table.to_json(), path)
        return 0

    if ns.subcommand == "montecarlo":
        trials = int(ns.trials)
        mc = McConfig(trials=trials, seed=ns.seed, shards=ns.shards)
        hist = simulate(cfg, mc, backend=ns.backend)
        lines = _config_echo_lines(cfg)
        lines += [
            f"# trials = {hist.trials}",
            f"# seed = {mc.seed}",
            f"# shards = {mc.shards}",
            f"# backend = {hist.backend}",
        ]
        if ns.compare:
            report = compare(output_distribution(cfg), hist)
            lines += [f"# {line}" for line in report.lines()]
        if ns.format == "structured":
            doc = {
                "format": "photonmux-histogram",
                "tool": f"photonmux {__version__}",
                "config": cfg.as_dict(),
                "trials": hist.trials,
                "seed": mc.seed,
                "shards": mc.shards,
                "backend": hist.backend,
                "counts": hist.counts.tolist(),
            }
            _emit(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n", path)
        else:
            lines.append("k,count,frequency")
            lines += [f"{k},{c},{f!r}" for k, c, f in hist.rows()]
            _emit("\n".join(lines) + "\n", path)
        if ns.compare and not report.passed:
            return 1
        return 0

    raise ConfigError(f"unknown subcommand {ns.subcommand!r}")


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return run(ns)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # noqa: BLE001 - single CLI error funnel
        record = {"error": type(exc).__name__, "message": str(exc), "subcommand": ns.subcommand}
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
