import csv

import pytest

from branchsim.harness.config import Experiment, ExperimentConfig, InterpretationChoice
from branchsim.harness.experiments import (
    DEUTSCH_COLUMNS,
    DISASTER_COLUMNS,
    SUMMARY_COLUMNS,
    SWEEP_COLUMNS,
    format_cell,
    render_summary,
    run_experiment,
    sweep,
    sweep_cells,
)
from branchsim.harness.seeding import derive_trial_seed
from branchsim.interpretations import Interpretation
from branchsim.protocols import DeutschMode, Scenario


def config(tmp_path, experiment, name="run.csv", **overrides) -> ExperimentConfig:
    values = dict(trials=300, seed=11, out=tmp_path / name)
    values.update(overrides)
    return ExperimentConfig(experiment=Experiment(experiment), **values)


def read_rows(path):
    with path.open(newline="", encoding="utf-8") as handle:
        return list(csv.reader(handle))


def summary_row(result, metric, interpretation):
    return next(r for r in result.summary if r.metric == metric and r.interpretation == interpretation)


def test_format_cell():
    assert format_cell(None) == ""
    assert format_cell(True) == "1"
    assert format_cell(Interpretation.MWI) == "mwi"
    assert format_cell(0.1) == "0.1"
    assert format_cell(7) == "7"


class TestDeutschExperiment:
    def test_rows_and_summary(self, tmp_path):
        result = run_experiment(config(tmp_path, "deutsch"))
        rows = read_rows(tmp_path / "run.csv")
        assert tuple(rows[0]) == DEUTSCH_COLUMNS
        assert len(rows) == 1 + 2 * 300
        assert rows[1][:3] == ["0", str(derive_trial_seed(11, 0)), "mwi"]
        assert {row[6] for row in rows[1:301]} == {"1"}
        assert all(r.passed for r in result.summary if r.exact)
        summary = read_rows(tmp_path / "run.csv.summary.csv")
        assert tuple(summary[0]) == SUMMARY_COLUMNS

    def test_rendered_summary(self, tmp_path):
        result = run_experiment(config(tmp_path, "deutsch", interpretation=InterpretationChoice.MWI))
        assert "✅ mwi  P(x-up) = 1.0 (exact)" in render_summary(result).splitlines()

    def test_dump_mode_agrees_across_interpretations(self, tmp_path):
        result = run_experiment(config(tmp_path, "deutsch", mode=DeutschMode.ENVIRONMENT_DUMP))
        exact = [r.value for r in result.summary if r.exact]
        assert exact == [pytest.approx(0.5), pytest.approx(0.5)]


class TestDisasterExperiment:
    def test_csv_header_and_length(self, tmp_path):
        run_experiment(config(tmp_path, "disaster", p=0.2, q=0.5))
        rows = read_rows(tmp_path / "run.csv")
        assert tuple(rows[0]) == DISASTER_COLUMNS
        assert len(rows) == 1 + 2 * 300
        for row in rows[1:]:
            reset, disaster = row[7], row[8]
            assert (disaster == "") == (reset == "0")

    def test_exact_rows_pass(self, tmp_path):
        result = run_experiment(config(tmp_path, "disaster", p=0.2, q=0.5))
        assert summary_row(result, "P_reset quantum", "-").passed
        assert summary_row(result, "P_dis quantum", "-").value == pytest.approx(1 / 3, abs=1e-10)
        assert summary_row(result, "P(disaster|k1)", "collapse").passed

    def test_correlated_backup_is_deterministic(self, tmp_path):
        result = run_experiment(
            config(tmp_path, "disaster", p=0.2, q=0.5, scenario=Scenario.CORRELATED,
                   interpretation=InterpretationChoice.MWI)
        )
        assert summary_row(result, "P(disaster|k1)", "mwi").value == 1.0
        assert summary_row(result, "P(disaster|k2)", "mwi").value == 0.0
        assert summary_row(result, "P(disaster|k1)", "mwi").passed

    def test_outputs_are_bit_identical(self, tmp_path):
        run_experiment(config(tmp_path, "disaster", name="a.csv", p=0.1, q=0.25))
        run_experiment(config(tmp_path, "disaster", name="b.csv", p=0.1, q=0.25))
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.csv.summary.csv").read_bytes() == (tmp_path / "b.csv.summary.csv").read_bytes()

    def test_worker_count_does_not_change_results(self, tmp_path):
        serial = run_experiment(config(tmp_path, "disaster", name="s.csv", p=0.1, q=0.25))
        threaded = run_experiment(config(tmp_path, "disaster", name="t.csv", p=0.1, q=0.25, workers=4))
        assert serial.rows == threaded.rows
        assert (tmp_path / "s.csv").read_bytes() == (tmp_path / "t.csv").read_bytes()


class TestSweep:
    def test_limit_cells_are_appended(self):
        assert sweep_cells([0.1], [0.5]) == [(0.1, 0.5), (0.001, 0.2), (0.0001, 0.5)]
        assert sweep_cells([0.001], [0.2]) == [(0.001, 0.2), (0.0001, 0.5)]

    def test_small_grid(self, tmp_path):
        cfg = config(tmp_path, "sweep", trials=50)
        result = sweep([0.1], [0.5], cfg)
        assert result.header == SWEEP_COLUMNS
        assert len(result.rows) == 6
        assert all(row[-1] for row in result.rows)
        assert summary_row(result, "cells agreeing", "mwi").passed
        assert summary_row(result, "limit error p=0.001 q=0.2", "-").value == pytest.approx(0.004)

    def test_zero_cell_has_no_conditional(self, tmp_path):
        cfg = config(tmp_path, "sweep", trials=20, interpretation=InterpretationChoice.COLLAPSE)
        row = sweep([0.0], [0.0], cfg).rows[0]
        columns = dict(zip(SWEEP_COLUMNS, row))
        assert columns["closed_p_dis"] is None
        assert columns["quantum_p_dis"] is None
        assert columns["mc_p_dis"] is None
        assert columns["agree"] is True
