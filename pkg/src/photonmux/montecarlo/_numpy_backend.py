"""Vectorized pure-numpy fallback for the event-level simulator kernel."""

from __future__ import annotations

import numpy as np

from ._tables import SamplingTables

__all__ = ["run_chunk"]


def run_chunk(uniforms: np.ndarray, tables: SamplingTables, counts: np.ndarray) -> None:
    """Simulate one chunk of trials from pre-drawn stream words.

    ``uniforms`` has shape (trials, S) with the per-trial slot layout of
    :mod:`._tables`; surviving photon counts are accumulated into ``counts``.
    """
    w = tables.n_windows
    trials = uniforms.shape[0]
    u_pairs = uniforms[:, 0:w]
    u_herald = uniforms[:, w:2 * w]
    u_dark = uniforms[:, 2 * w:3 * w]
    u_survive = uniforms[:, 3 * w]

    pairs = np.searchsorted(tables.pair_cdf, u_pairs.ravel(), side="right")
    pairs = pairs.reshape(trials, w)
    triggered = u_herald < tables.herald_prob[pairs]
    if tables.p_dark > 0.0:
        triggered |= u_dark < tables.p_dark

    any_trigger = triggered.any(axis=1)
    routed = np.where(any_trigger, triggered.argmax(axis=1), w - 1)
    n_routed = pairs[np.arange(trials), routed]

    survivors = (u_survive[:, None] >= tables.survival_cdf[n_routed]).sum(axis=1)
    np.add.at(counts, survivors, 1)
