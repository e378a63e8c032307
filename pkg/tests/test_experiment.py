import csv
import math

import numpy as np
import pytest

from mps_seqmodel.errors import ContractViolation
from mps_seqmodel.experiment import (
    AGGREGATE_COLUMNS, ROW_COLUMNS, SERIES_COLUMNS, ExperimentConfig, emit_report, read_rows, run_experiment,
    trial_seed,
)


def test_perfect_learning_row():
    rec = run_experiment(ExperimentConfig(n=8, grid=(1.0,), trials=1, seed=0))
    assert rec.rows[0].distance == pytest.approx(0.0, abs=1e-10)
    assert rec.rows[0].n_t == 128


def test_config_validation():
    with pytest.raises(ContractViolation):
        ExperimentConfig(trials=0)
    with pytest.raises(ContractViolation):
        ExperimentConfig(grid=(0.0, 0.5))
    with pytest.raises(ContractViolation):
        ExperimentConfig(variant="nope")


def test_trial_seeds_distinct_and_stable():
    seeds = {trial_seed(1, i, t) for i in range(5) for t in range(5)}
    assert len(seeds) == 25
    assert trial_seed(1, 2, 3) == trial_seed(1, 2, 3)


def test_report_files_and_aggregates(tmp_path):
    cfg = ExperimentConfig(n=10, grid=(0.1, 0.3, 1.0), trials=4, seed=3)
    rec = run_experiment(cfg)
    paths = emit_report(rec, tmp_path / "run")
    rows = read_rows(paths["rows"])
    assert list(rows[0].keys()) == list(ROW_COLUMNS) and len(rows) == 12
    agg = read_rows(paths["aggregate"])
    assert list(agg[0].keys()) == list(AGGREGATE_COLUMNS) and len(agg) == 3
    assert list(read_rows(paths["series"])[0].keys()) == list(SERIES_COLUMNS)
    for a in agg:
        d = np.array([float(r["distance"]) for r in rows if r["f"] == a["f"]])
        assert float(a["mean_distance"]) == pytest.approx(d.mean(), abs=1e-15)
        assert float(a["std_distance"]) == pytest.approx(d.std(), abs=1e-15)
        assert int(a["trials"]) == d.size


def test_deterministic_bytes_across_thread_counts(tmp_path, monkeypatch):
    cfg = ExperimentConfig(n=10, grid=(0.05, 0.2), trials=3, seed=9)
    monkeypatch.setenv("MPS_SEQMODEL_THREADS", "1")
    a = emit_report(run_experiment(cfg), tmp_path / "a")
    monkeypatch.setenv("MPS_SEQMODEL_THREADS", "4")
    b = emit_report(run_experiment(cfg), tmp_path / "b")
    for key in a:
        assert a[key].read_bytes() == b[key].read_bytes()


def test_empty_grid_writes_headers(tmp_path):
    paths = emit_report(run_experiment(ExperimentConfig(n=8, grid=(), trials=1)), tmp_path / "e")
    assert paths["rows"].read_text() == ",".join(ROW_COLUMNS) + "\n"
    assert paths["aggregate"].read_text() == ",".join(AGGREGATE_COLUMNS) + "\n"


def test_failed_rows_are_recorded_and_run_continues(monkeypatch):
    import mps_seqmodel.experiment as ex
    real = ex.train

    def flaky(T, policy):
        if T.n_t == 26:
            raise ContractViolation("boom")
        return real(T, policy)

    monkeypatch.setattr(ex, "train", flaky)
    rec = run_experiment(ExperimentConfig(n=8, grid=(0.2, 0.5), trials=2, seed=1))
    bad = [r for r in rec.rows if r.error]
    assert len(bad) == 2 and all("boom" in r.error for r in bad)
    assert math.isnan(bad[0].distance)
    assert rec.aggregates[0].trials == 0 and rec.aggregates[1].trials == 2


def test_paper_literal_variant_column():
    rec = run_experiment(ExperimentConfig(n=8, grid=(1.0,), trials=1, variant="paper-literal"))
    assert rec.rows[0].distance < 0


def test_bad_thread_env(monkeypatch):
    monkeypatch.setenv("MPS_SEQMODEL_THREADS", "many")
    with pytest.raises(ContractViolation):
        run_experiment(ExperimentConfig(n=8, grid=(1.0,), trials=2))


def test_unwritable_output_reports_path(tmp_path):
    rec = run_experiment(ExperimentConfig(n=8, grid=(1.0,), trials=1))
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        emit_report(rec, blocker / "sub" / "out")
