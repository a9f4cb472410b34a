import json
import math

import numpy as np
import pytest

from photonmux import SourceConfig, clock_report, figure2, output_distribution
from photonmux.optimize import optimize_mu
from photonmux.stats import poisson_vector
from photonmux.sweeps import (
    SweepRecord,
    SweepTable,
    figure3,
    figure4,
    figure5,
    gnuplot_commands,
    record_for,
    sweep_axis,
)


@pytest.fixture(scope="module")
def fig2():
    return figure2()


class TestFigure2:
    def test_one_row_per_stage_count(self, fig2):
        assert len(fig2.records) == 11
        assert [r.m for r in fig2.records] == list(range(0, 11))

    def test_single_window_row_is_poisson_optimum(self, fig2):
        row = fig2.records[0]
        assert row.mu_opt == pytest.approx(1.0, abs=1e-5)
        assert row.p1 == pytest.approx(math.exp(-1.0), rel=1e-7)

    def test_p1_strictly_increasing_in_stages(self, fig2):
        p1 = [r.p1 for r in fig2.records]
        assert all(a < b for a, b in zip(p1, p1[1:]))

    def test_mandel_q_non_increasing_in_stages(self, fig2):
        q = [r.mandel_q for r in fig2.records]
        assert all(a >= b for a, b in zip(q, q[1:]))

    def test_rows_recomputable_from_config(self, fig2):
        row = fig2.records[4]
        cfg = SourceConfig.lossless(m=row.m, mu=row.mu)
        dist = output_distribution(cfg)
        assert row.p1 == dist.p(1)
        assert row.p0 == dist.p(0)


class TestFigure3:
    def test_single_window_curve_is_thinned_poisson(self):
        grid = np.geomspace(1e-3, 2.0, 25)
        table = figure3(m_values=[0], mu_grid=grid, il_db_values=[0.5])
        for record in table.records:
            lam = record.mu * record.e_s_total
            assert record.p1 == pytest.approx(float(poisson_vector(lam, 30)[1]), rel=1e-12)

    def test_grid_axes_cover_all_combinations(self):
        grid = [0.05, 0.1]
        table = figure3(m_values=[0, 1], mu_grid=grid, il_db_values=[0.5, 1.0])
        assert len(table.records) == 8
        seen = {(r.m, r.e_sw_db, r.mu) for r in table.records}
        assert len(seen) == 8


class TestFigure4:
    def test_zero_loss_column_matches_switchless_chain(self):
        table = figure4(mu_values=[0.1], il_grid=[0.0, 0.5], m_values=[4])
        at_zero = [r for r in table.records if r.e_sw_db == 0.0][0]
        direct = output_distribution(SourceConfig(m=4, mu=0.1, e_h=0.85, e_s=0.9, e_sw_db=0.0))
        assert at_zero.p1 == direct.p(1)
        assert at_zero.e_s_total == pytest.approx(0.9, rel=1e-15)

    def test_higher_stage_counts_decay_faster_in_db(self):
        # slope of log10(P1) against IL approaches -(m+1)/10 at large IL
        table = figure4(mu_values=[0.1], il_grid=[1.5, 2.0], m_values=[1, 4])
        def slope(m):
            rows = [r for r in table.records if r.m == m]
            return (math.log10(rows[1].p1) - math.log10(rows[0].p1)) / 0.5
        assert slope(4) < slope(1) < 0


class TestFigure5:
    def test_vanishing_target_recovers_unconstrained_peak(self):
        table = figure5(snr_targets=[1e-9, 50.0], m_values=[4], il_db_values=[0.5])
        relaxed = [r for r in table.records if r.snr_target == 1e-9][0]
        constrained = [r for r in table.records if r.snr_target == 50.0][0]
        unconstrained = optimize_mu(SourceConfig(m=4, mu=1e-3, e_h=0.85, e_s=0.9, e_sw_db=0.5))
        assert relaxed.p1 == pytest.approx(unconstrained.p1_max, rel=1e-8)
        assert constrained.p1 < relaxed.p1
        assert constrained.snr >= 50.0 - 1e-6

    def test_curves_non_increasing_in_target(self):
        table = figure5(snr_targets=[5.0, 20.0, 100.0], m_values=[2], il_db_values=[1.0])
        p1 = [r.p1 for r in table.records]
        assert all(a >= b - 1e-9 for a, b in zip(p1, p1[1:]))


class TestSweepTable:
    def test_records_match_direct_calls_bitwise(self):
        base = SourceConfig(m=2, mu=0.1, e_h=0.85, e_s=0.9, e_sw_db=0.5)
        table = sweep_axis(base, "mu", [0.05, 0.1, 0.2])
        for record in table.records:
            dist = output_distribution(base.replace(mu=record.mu))
            assert record.p1 == dist.p(1)
            assert record.p0 == dist.p(0)
            assert record.p_ge2 == dist.p_ge(2)

    def test_axis_order_permutes_records_only(self):
        base = SourceConfig(m=1, mu=0.1, e_h=0.9)
        fwd = sweep_axis(base, "mu", [0.05, 0.1, 0.2])
        rev = sweep_axis(base, "mu", [0.2, 0.1, 0.05])
        assert fwd.records == tuple(reversed(rev.records))

    def test_rejects_unknown_axis(self):
        with pytest.raises(ValueError):
            sweep_axis(SourceConfig(m=0, mu=0.1), "e_h", [0.5])

    def test_rejects_empty_table(self):
        with pytest.raises(ValueError):
            SweepTable("custom", ())

    def test_csv_shape(self):
        base = SourceConfig(m=0, mu=0.1)
        table = sweep_axis(base, "mu", [0.05, 0.1])
        lines = table.to_csv().strip().split("\n")
        comments = [l for l in lines if l.startswith("#")]
        data = [l for l in lines if not l.startswith("#")]
        assert any("figure_id = custom" in c for c in comments)
        assert data[0] == ",".join(SweepRecord.FIELDS)
        assert len(data) == 3
        assert "." in data[1] and ";" not in data[1]

    def test_json_round_trip(self):
        base = SourceConfig(m=1, mu=0.1, e_h=0.85)
        table = sweep_axis(base, "mu", [0.05, 0.15])
        back = SweepTable.from_json(table.to_json())
        assert back.figure_id == table.figure_id
        assert back.records == table.records

    def test_serialization_is_byte_stable(self):
        base = SourceConfig(m=1, mu=0.1, e_h=0.85)
        a = sweep_axis(base, "mu", [0.05, 0.15])
        b = sweep_axis(base, "mu", [0.05, 0.15])
        assert a.to_csv() == b.to_csv()
        assert a.to_json() == b.to_json()

    def test_json_metadata_carries_tool_and_hash(self):
        table = sweep_axis(SourceConfig(m=0, mu=0.1), "mu", [0.1])
        doc = json.loads(table.to_json())
        assert doc["metadata"]["tool"] == "photonmux"
        assert "config_hash" in doc["metadata"]


class TestClockReport:
    def test_four_stages_at_two_ns(self):
        report = clock_report(SourceConfig(m=4, delta_t0_ns=2.0, mu=0.1))
        assert report.period_ns == 32.0
        assert report.frequency_hz == pytest.approx(31.25e6, rel=1e-15)

    def test_single_window(self):
        report = clock_report(SourceConfig(m=0, delta_t0_ns=2.0, mu=0.1))
        assert report.period_ns == 2.0
        assert report.frequency_hz == pytest.approx(500e6, rel=1e-15)

    def test_ten_stages(self):
        report = clock_report(SourceConfig(m=10, delta_t0_ns=2.0, mu=0.01))
        assert report.period_ns == 2048.0
        assert report.frequency_hz == pytest.approx(488281.25, rel=1e-15)


def test_gnuplot_emitter_mentions_all_groups():
    table = figure4(mu_values=[0.1], il_grid=[0.0, 1.0], m_values=[0, 3])
    script = gnuplot_commands(table, "fig4.csv", x="e_sw_db", y="p1", group_by="m")
    assert "plot " in script
    assert "m=0" in script and "m=3" in script


def test_record_for_nan_mandel_q_at_zero_pump():
    record = record_for(SourceConfig(m=2, mu=0.0, e_h=0.85))
    assert math.isnan(record.mandel_q)
    assert record.p0 == 1.0
