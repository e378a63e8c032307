"""Seeded training-fraction sweep and its CSV artifacts."""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import sample_training_set, training_size
from .errors import ContractViolation
from .mps import overlap, parity_target_mps
from .theory import CalibrationTable, PredictionPoint, bhattacharya_distance, predict_curve
from .trainer import TruncationPolicy, train

log = logging.getLogger(__name__)

ROW_COLUMNS = ("N", "f", "trial", "seed", "N_T", "overlap", "distance")
AGGREGATE_COLUMNS = ("N", "f", "trials", "mean_distance", "std_distance", "theory_distance")
SERIES_COLUMNS = ("f", "exp_mean", "exp_std", "theory_distance")
VARIANTS = ("standard", "paper-literal")


@dataclass
class ExperimentConfig:
    n: int = 16
    grid: Sequence[float] = (0.02, 0.04, 0.06, 0.08, 0.1, 0.12, 0.14, 0.16, 0.18, 0.2)
    trials: int = 10
    seed: int = 0
    policy: TruncationPolicy = field(default_factory=TruncationPolicy)
    output: str | os.PathLike | None = None
    variant: str = "standard"
    calibration: CalibrationTable | None = None

    def __post_init__(self):
        self.grid = tuple(float(f) for f in self.grid)
        if self.trials < 1:
            raise ContractViolation("trials must be >= 1")
        if self.n < 3:
            raise ContractViolation("experiments need N >= 3")
        bad = [f for f in self.grid if not 0.0 < f <= 1.0]
        if bad:
            raise ContractViolation(f"grid values must lie in (0, 1]: {bad}")
        if self.variant not in VARIANTS:
            raise ContractViolation(f"unknown distance variant {self.variant!r}")


@dataclass
class TrialRow:
    n: int
    f: float
    trial: int
    seed: int
    n_t: int
    overlap: float
    distance: float
    deviations: list = field(default_factory=list)
    error: str | None = None


@dataclass
class Aggregate:
    f: float
    trials: int
    mean_distance: float
    std_distance: float
    theory: PredictionPoint


@dataclass
class ExperimentRecord:
    config: ExperimentConfig
    rows: list[TrialRow]
    aggregates: list[Aggregate]

    def distances(self, f_index: int) -> np.ndarray:
        f = self.config.grid[f_index]
        return np.array([r.distance for r in self.rows if r.f == f and r.error is None])


def trial_seed(base: int, f_index: int, trial: int) -> int:
    return int(np.random.SeedSequence([int(base), int(f_index), int(trial)]).generate_state(1)[0])


def _run_trial(cfg: ExperimentConfig, target, f_index: int, trial: int) -> TrialRow:
    f = cfg.grid[f_index]
    seed = trial_seed(cfg.seed, f_index, trial)
    row = TrialRow(cfg.n, f, trial, seed, training_size(cfg.n, f), math.nan, math.nan)
    try:
        T = sample_training_set(cfg.n, f, seed)
        m, diag = train(T, cfg.policy)
        ov = overlap(m, target) / math.sqrt(m.norm_squared())
        row.overlap = ov
        row.distance = bhattacharya_distance(ov, cfg.variant, cfg.n)
        row.deviations = diag.angles().deviations()
    except Exception as exc:  # recorded per row; the sweep goes on
        log.warning("f=%g trial=%d failed: %s", f, trial, exc)
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def worker_count() -> int:
    env = os.environ.get("MPS_SEQMODEL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ContractViolation(f"MPS_SEQMODEL_THREADS must be an integer, got {env!r}") from None
    return min(4, os.cpu_count() or 1)


def _mean_std(values: np.ndarray) -> tuple[float, float]:
    if values.size == 0:
        return math.nan, math.nan
    return float(np.mean(values)), float(np.std(values))


def run_experiment(cfg: ExperimentConfig) -> ExperimentRecord:
    """Train ``trials`` models per fraction and attach the predicted curve.

    Rows come back ordered by (fraction index, trial) whatever the thread count.
    """
    target = parity_target_mps(cfg.n)
    jobs = [(i, t) for i in range(len(cfg.grid)) for t in range(cfg.trials)]
    workers = worker_count()
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda job: _run_trial(cfg, target, *job), jobs))
    else:
        rows = [_run_trial(cfg, target, i, t) for i, t in jobs]

    theory = predict_curve(cfg.n, cfg.grid, cfg.calibration, cfg.variant)
    aggregates = []
    for i, f in enumerate(cfg.grid):
        d = np.array([r.distance for r in rows[i * cfg.trials:(i + 1) * cfg.trials] if r.error is None])
        mean, std = _mean_std(d)
        aggregates.append(Aggregate(f, int(d.size), mean, std, theory[i]))
    return ExperimentRecord(cfg, rows, aggregates)


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def _write_csv(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(x) for x in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def report_paths(base) -> dict[str, Path]:
    """rows / aggregate / series file names derived from one output prefix."""
    base = Path(base)
    stem = base.name[:-4] if base.suffix == ".csv" else base.name
    parent = base.parent
    return {
        "rows": parent / f"{stem}_rows.csv",
        "aggregate": parent / f"{stem}_aggregate.csv",
        "series": parent / f"{stem}_series.csv",
    }


def emit_report(rec: ExperimentRecord, path) -> dict[str, Path]:
    paths = report_paths(path)
    paths["rows"].parent.mkdir(parents=True, exist_ok=True)
    n = rec.config.n
    _write_csv(paths["rows"], ROW_COLUMNS,
               [(r.n, r.f, r.trial, r.seed, r.n_t, r.overlap, r.distance) for r in rec.rows])
    _write_csv(paths["aggregate"], AGGREGATE_COLUMNS,
               [(n, a.f, a.trials, a.mean_distance, a.std_distance, a.theory.distance) for a in rec.aggregates])
    _write_csv(paths["series"], SERIES_COLUMNS,
               [(a.f, a.mean_distance, a.std_distance, a.theory.distance) for a in rec.aggregates])
    return paths


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
