"""Fit the gap multiplier c(f) from seeded training runs.

For each fraction, M training sets are drawn, trained with bond 2, and the
raw even-block gap |e0 - o1| is read from every step's diagnostics.  The
per-fraction estimate is the mean of those gaps divided by E[G2]; the
shipped multiplier is a weighted quadratic fit through the estimates, which
removes run-to-run noise that would otherwise put kinks in the predicted
curve.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import sample_training_set
from .errors import ContractViolation
from .theory import CalibrationTable, expected_G2
from .trainer import TruncationPolicy, train

log = logging.getLogger(__name__)

DEFAULT_GRID = tuple(round(0.01 * i, 2) for i in range(1, 21)) + (0.25, 0.3, 0.4, 0.5, 0.6, 0.75, 0.9)
FIT_DEGREE = 2


@dataclass
class CalibrationFit:
    table: CalibrationTable
    raw: np.ndarray      # per-fraction mean ratio
    stderr: np.ndarray   # its standard error over runs

    def header(self) -> str:
        lines = [
            "gap multiplier c(f): weighted quadratic fit to mean raw |e0 - o1| over steps 2..N / E[G2]",
            self.table.source or "",
            "raw estimates (f, mean ratio, standard error):",
        ]
        lines += [f"  {float(f)!r} {float(r)!r} {float(e)!r}"
                  for f, r, e in zip(self.table.fractions, self.raw, self.stderr)]
        return "\n".join(lines)


def measured_gaps(n: int, f: float, runs: int, seed: int) -> tuple[int, np.ndarray]:
    """(N_T, gaps) with gaps shaped (runs, N-1): raw |G_e| for steps 2..N."""
    out = np.full((runs, n - 1), np.nan)
    n_t = 0
    for r in range(runs):
        T = sample_training_set(n, f, seed, trial=r)
        n_t = T.n_t
        _, diag = train(T, TruncationPolicy(max_bond=2))
        for step in diag.steps:
            if step.stats is not None:
                out[r, step.k - 2] = abs(step.stats.gap_even)
    return n_t, out


def calibrate_fit(n: int = 16, grid: Sequence[float] = DEFAULT_GRID, runs: int = 50,
                  seed: int = 20240601) -> CalibrationFit:
    if n < 3:
        raise ContractViolation("calibration needs N >= 3")
    if runs < 2:
        raise ContractViolation("calibration needs at least 2 runs per fraction")
    fs, raw, err = [], [], []
    for i, f in enumerate(grid):
        n_t, gaps = measured_gaps(n, f, runs, seed + 7919 * i)
        g2 = expected_G2(n, n_t)
        if not g2 > 0:
            continue  # full population: no gap to scale
        per_run = np.nanmean(gaps, axis=1) / g2
        fs.append(float(f))
        raw.append(float(np.mean(per_run)))
        err.append(float(np.std(per_run, ddof=1) / math.sqrt(runs)))
        log.info("f=%g N_T=%d E[G2]=%.6g c=%.6g +- %.2g", f, n_t, g2, raw[-1], err[-1])
    if not fs:
        raise ContractViolation("no fraction in the grid has a nonzero expected gap")
    fs, raw, err = np.array(fs), np.array(raw), np.array(err)
    deg = min(FIT_DEGREE, fs.size - 1)
    weights = 1.0 / np.maximum(err, 1e-12 * np.max(np.abs(raw)) + 1e-300)
    fitted = np.polynomial.Polynomial.fit(fs, raw, deg, w=weights)(fs) if deg > 0 else raw.copy()
    table = CalibrationTable(fs, fitted, n, f"calibrate(n={n}, runs={runs}, seed={seed})")
    return CalibrationFit(table, raw, err)


def calibrate(n: int = 16, grid: Sequence[float] = DEFAULT_GRID, runs: int = 50,
              seed: int = 20240601) -> CalibrationTable:
    return calibrate_fit(n, grid, runs, seed).table
