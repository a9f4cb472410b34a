import numpy as np
import pytest

from photonmux import (
    McConfig,
    SourceConfig,
    compare,
    ideal_distribution,
    output_distribution,
    simulate,
)
from photonmux.montecarlo import available_backends
from photonmux.montecarlo._tables import build_tables, philox_at_trial, slots_per_trial

BACKENDS = available_backends()
LOSSY = SourceConfig(m=4, mu=0.1, e_h=0.85, e_s=0.9, e_sw_db=0.5)
DARK = SourceConfig(m=3, mu=0.1, e_h=0.85, e_s=0.9, e_sw_db=0.5, r_dark=5e6)


class TestConfig:
    def test_rejects_zero_trials(self):
        with pytest.raises(ValueError):
            McConfig(trials=0)

    def test_rejects_overflow_scale_trials(self):
        with pytest.raises(ValueError):
            McConfig(trials=1 << 41)

    def test_rejects_bad_seed(self):
        with pytest.raises(ValueError):
            McConfig(trials=10, seed=-1)
        with pytest.raises(ValueError):
            McConfig(trials=10, seed=1 << 64)


class TestStreamLayout:
    def test_slots_are_block_aligned(self):
        for w in (1, 2, 4, 16, 1024):
            assert slots_per_trial(w) % 4 == 0
            assert slots_per_trial(w) >= 3 * w + 1

    def test_positioning_matches_contiguous_stream(self):
        w = 4
        slots = slots_per_trial(w)
        whole = philox_at_trial(99, 0, w).random((6, slots))
        tail = philox_at_trial(99, 2, w).random((4, slots))
        assert np.array_equal(whole[2:], tail)


class TestDeterminism:
    def test_identical_runs_identical_histograms(self):
        a = simulate(LOSSY, McConfig(trials=50_000, seed=5))
        b = simulate(LOSSY, McConfig(trials=50_000, seed=5))
        assert np.array_equal(a.counts, b.counts)

    def test_seed_changes_histogram(self):
        a = simulate(LOSSY, McConfig(trials=50_000, seed=5))
        b = simulate(LOSSY, McConfig(trials=50_000, seed=6))
        assert not np.array_equal(a.counts, b.counts)

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_shard_count_never_changes_results(self, backend):
        base = simulate(LOSSY, McConfig(trials=30_001, seed=9, shards=1), backend)
        for shards in (2, 8):
            sharded = simulate(LOSSY, McConfig(trials=30_001, seed=9, shards=shards), backend)
            assert np.array_equal(base.counts, sharded.counts)

    @pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernel unavailable")
    @pytest.mark.parametrize("cfg", [LOSSY, DARK, SourceConfig(m=0, mu=0.3),
                                     SourceConfig.lossless(m=2, mu=0.05)])
    def test_backends_bit_identical(self, cfg):
        mc = McConfig(trials=40_000, seed=123)
        a = simulate(cfg, mc, backend="cython")
        b = simulate(cfg, mc, backend="numpy")
        assert np.array_equal(a.counts, b.counts)


class TestEventRules:
    def test_dark_pump_yields_only_vacuum(self):
        hist = simulate(SourceConfig.lossless(m=3, mu=0.0), McConfig(trials=10_000, seed=1))
        assert hist.counts[0] == 10_000
        assert hist.counts[1:].sum() == 0

    def test_counts_sum_to_trials(self):
        hist = simulate(DARK, McConfig(trials=12_345, seed=3))
        assert int(hist.counts.sum()) == 12_345
        rows = hist.rows()
        assert rows[0][0] == 0
        assert sum(r[1] for r in rows) == 12_345

    def test_ideal_source_agrees_with_exact_distribution(self):
        cfg = SourceConfig.lossless(m=3, mu=0.05)
        hist = simulate(cfg, McConfig(trials=1_000_000, seed=21))
        report = compare(ideal_distribution(cfg).with_meta(config=cfg), hist)
        assert report.passed, report.lines()

    def test_lossy_source_agrees_with_analytic_chain(self):
        hist = simulate(LOSSY, McConfig(trials=500_000, seed=22))
        report = compare(output_distribution(LOSSY), hist)
        assert report.passed, report.lines()

    def test_heralding_loss_only_agrees(self):
        cfg = SourceConfig(m=4, mu=0.1, e_h=0.85)
        hist = simulate(cfg, McConfig(trials=1_000_000, seed=24))
        report = compare(output_distribution(cfg), hist)
        assert report.passed, report.lines()

    def test_dark_counts_agree_with_analytic_chain(self):
        hist = simulate(DARK, McConfig(trials=500_000, seed=23))
        report = compare(output_distribution(DARK), hist)
        assert report.passed, report.lines()


class TestCompare:
    def test_detects_wrong_model(self):
        # Analytic curve for e_h = 0.5 against samples drawn at e_h = 0.85.
        hist = simulate(LOSSY, McConfig(trials=200_000, seed=31))
        wrong = output_distribution(LOSSY.replace(e_h=0.5))
        report = compare(wrong.with_meta(config=LOSSY), hist)
        assert not report.passed

    def test_rejects_config_mismatch(self):
        hist = simulate(LOSSY, McConfig(trials=1_000, seed=1))
        other = output_distribution(LOSSY.replace(mu=0.2))
        with pytest.raises(ValueError, match="different configs"):
            compare(other, hist)

    def test_report_lines_render(self):
        hist = simulate(LOSSY, McConfig(trials=50_000, seed=41))
        report = compare(output_distribution(LOSSY), hist)
        text = "\n".join(report.lines())
        assert "tv_distance" in text and "agreement" in text


class TestTables:
    def test_rejects_pump_beyond_cap(self):
        with pytest.raises(ValueError, match="cap"):
            build_tables(SourceConfig(m=0, mu=120.0))

    def test_survival_rows_bounded(self):
        tables = build_tables(LOSSY)
        assert tables.survival_cdf.shape[0] == tables.survival_cdf.shape[1]
        assert np.all(tables.survival_cdf[:, -1] == 1.0)
