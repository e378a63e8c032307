"""Cross-module equivalence suites, numbered 1-9.

Each ``check_*`` returns a :class:`CheckResult`; nothing raises on a failed
comparison, so a caller can run the whole battery and print one line each.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import oracle
from .data import TrainingSet, even_strings, popcount_parity, sample_training_set, unpack_bits
from .errors import DegenerateBlockError
from .experiment import ExperimentConfig, run_experiment
from .linalg import sym_eig, two_by_two_eig
from .mps import (
    amplitudes, enumerate_probabilities, left_isometry_matrix, overlap, parity_target_mps, sample_many,
)
from .theory import AngleSchedule, bhattacharya_distance, exact_replay, expected_G2, predict_overlap
from .trainer import TruncationPolicy, train

QUARTER_PI = math.pi / 4
SIGNIFICANCE = 1e-3


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float = 0.0
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} criterion {self.number}: {self.name} ({self.detail}; {self.elapsed:.2f}s)"


def _timed(number: int, name: str, body: Callable[[], tuple[bool, str, dict]]) -> CheckResult:
    t0 = time.perf_counter()
    try:
        ok, detail, metrics = body()
    except Exception as exc:  # a crash is a failure, reported like one
        ok, detail, metrics = False, f"{type(exc).__name__}: {exc}", {}
    return CheckResult(number, name, bool(ok), detail, time.perf_counter() - t0, metrics)


def _random_set(rng: np.random.Generator, n: int, n_t: int, even_only: bool = False) -> TrainingSet:
    pool = even_strings(n) if even_only else np.arange(1 << n, dtype=np.uint64)
    picks = np.sort(rng.choice(pool.size, size=n_t, replace=False))
    return TrainingSet(n, pool[picks].astype(np.uint64), None)


# 1 ------------------------------------------------------------------------

def check_perfect_learning(ns=(4, 8, 12, 16), tol: float = 1e-10, budget: float = 5.0) -> CheckResult:
    def body():
        worst_ov = worst_d = worst_angle = 0.0
        t0 = time.perf_counter()
        for n in ns:
            T = sample_training_set(n, 1.0, seed=0)
            m, diag = train(T, TruncationPolicy(max_bond=2))
            ov = overlap(m, parity_target_mps(n))
            worst_ov = max(worst_ov, abs(ov - 1.0))
            worst_d = max(worst_d, abs(bhattacharya_distance(ov / math.sqrt(m.norm_squared()))))
            ang = diag.angles()
            measured = [a for a in (*ang.theta, *ang.phi) if a is not None]
            worst_angle = max(worst_angle, max(abs(a - QUARTER_PI) for a in measured))
        elapsed = time.perf_counter() - t0
        ok = worst_ov <= tol and worst_d <= tol and worst_angle <= tol and elapsed < budget
        return ok, (f"max|overlap-1|={worst_ov:.2e} max|distance|={worst_d:.2e} "
                    f"max|angle-pi/4|={worst_angle:.2e} runtime={elapsed:.2f}s"), {
            "overlap": worst_ov, "distance": worst_d, "angle": worst_angle, "runtime": elapsed}
    return _timed(1, "perfect learning at f=1", body)


# 2 ------------------------------------------------------------------------

def check_lossless(sets: int = 20, tol: float = 1e-9, seed: int = 2) -> CheckResult:
    def body():
        rng = np.random.default_rng(seed)
        worst_amp = worst_ov = 0.0
        for _ in range(sets):
            n = int(rng.integers(2, 13))
            n_t = int(rng.integers(1, min(64, 1 << n) + 1))
            T = _random_set(rng, n, n_t)
            m, _ = train(T, TruncationPolicy(max_bond=None, cutoff=0.0))
            amp = amplitudes(m, T.symbols())
            worst_amp = max(worst_amp, float(np.max(np.abs(amp - 1.0 / math.sqrt(n_t)))))
            psi = oracle.dense_state(T)
            worst_ov = max(worst_ov, abs(float(m.to_dense() @ psi.amplitudes) - 1.0))
        return worst_amp <= tol and worst_ov <= tol, \
            f"max|amp-1/sqrt(N_T)|={worst_amp:.2e} max|overlap-1|={worst_ov:.2e}", \
            {"amplitude": worst_amp, "overlap": worst_ov}
    return _timed(2, "lossless reconstruction without truncation", body)


# 3 ------------------------------------------------------------------------

def conjugated_density(tensors, rho_a: np.ndarray, k: int, d: int = 2) -> np.ndarray:
    """(U (x) I)^T rho_A (U (x) I), with U the composed isometry of sites 1..k-1."""
    u = left_isometry_matrix(tensors[: k - 1])
    lift = np.kron(u, np.eye(d))
    return lift.T @ rho_a @ lift


def check_oracle_equivalence(sets: int = 12, max_n: int = 10, tol: float = 1e-10, seed: int = 3) -> CheckResult:
    def body():
        rng = np.random.default_rng(seed)
        worst, steps = 0.0, 0
        for i in range(sets):
            n = int(rng.integers(3, max_n + 1))
            parity_only = i % 2 == 0
            size = (1 << (n - 1)) if parity_only else (1 << n)
            n_t = int(rng.integers(1, size + 1))
            T = _random_set(rng, n, n_t, even_only=parity_only)
            policy = TruncationPolicy(max_bond=2) if i % 3 else TruncationPolicy(max_bond=None, cutoff=0.0)
            m, diag = train(T, policy, record_densities=True)
            psi = oracle.dense_state(T)
            for step in diag.steps:
                ref = conjugated_density(m.tensors, oracle.dense_reduced_density(psi, step.k), step.k)
                worst = max(worst, float(np.max(np.abs(ref - step.density))))
                steps += 1
        return worst <= tol, f"{steps} steps, max entry difference {worst:.2e}", {"difference": worst}
    return _timed(3, "effective density equals conjugated dense reduced density", body)


# 4 ------------------------------------------------------------------------

def check_two_by_two(triples: int = 1000, seed: int = 4, val_tol: float = 1e-12, vec_tol: float = 1e-10) -> CheckResult:
    def body():
        rng = np.random.default_rng(seed)
        worst_val = worst_vec = 0.0
        for _ in range(triples):
            d1, d2, s = (int(x) for x in rng.integers(0, 101, size=3))
            closed = two_by_two_eig(d1, d2, s)
            ref = sym_eig(np.array([[d1, s], [s, d2]], dtype=float) / max(d1 + d2, 1))
            worst_val = max(worst_val, abs(closed.lam_plus - ref.eigenvalues[0]),
                            abs(closed.lam_minus - ref.eigenvalues[1]))
            if not closed.degenerate:
                for vec, col in ((closed.e_plus, 0), (closed.e_minus, 1)):
                    r = ref.eigenvectors[:, col]
                    worst_vec = max(worst_vec, min(np.max(np.abs(vec - r)), np.max(np.abs(vec + r))))
        worked = two_by_two_eig(2, 4, 2)
        expected = (6 + math.sqrt(20)) / 12
        ok = worst_val <= val_tol and worst_vec <= vec_tol and abs(worked.lam_plus - expected) <= val_tol
        return ok, (f"max eigenvalue diff {worst_val:.2e}, max eigenvector diff {worst_vec:.2e}, "
                    f"worked example lambda+={worked.lam_plus:.12f}"), {"values": worst_val, "vectors": worst_vec}
    return _timed(4, "closed-form 2x2 eigenpairs", body)


# 5 ------------------------------------------------------------------------

def _same_angles(a: AngleSchedule, b: AngleSchedule) -> float:
    worst = 0.0
    for x, y in zip((*a.theta, *a.phi), (*b.theta, *b.phi)):
        if (x is None) != (y is None):
            return math.inf
        if x is not None:
            worst = max(worst, abs(x - y))
    return worst


def check_replay(sets: int = 50, max_n: int = 12, tol: float = 1e-9, seed: int = 5) -> CheckResult:
    def body():
        rng = np.random.default_rng(seed)
        worst, done, skipped = 0.0, 0, 0
        while done < sets:
            n = int(rng.integers(3, max_n + 1))
            f = float(rng.choice([0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0]))
            n_t = max(1, int(round(f * (1 << (n - 1)))))
            T = _random_set(rng, n, n_t, even_only=True)
            try:
                replay, _ = exact_replay(T)
            except DegenerateBlockError:
                skipped += 1
                if skipped > 10 * sets:
                    return False, f"too many degenerate draws ({skipped})", {}
                continue
            _, diag = train(T, TruncationPolicy(max_bond=2))
            worst = max(worst, _same_angles(replay, diag.angles()))
            done += 1
        return worst <= tol, f"{done} sets ({skipped} degenerate redrawn), max angle diff {worst:.2e}", \
            {"difference": worst, "redrawn": skipped}
    return _timed(5, "exact replay reproduces trainer angles", body)


# 6 ------------------------------------------------------------------------

def check_transfer_matrix(schedules: int = 100, max_n: int = 10, tol: float = 1e-12, seed: int = 6) -> CheckResult:
    def body():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(schedules):
            n = int(rng.integers(2, max_n + 1))
            th = tuple(float(x) for x in rng.uniform(0, math.pi / 2, n - 1))
            ph = tuple(float(x) for x in rng.uniform(0, math.pi / 2, n - 1))
            sched = AngleSchedule(n, th, ph)
            worst = max(worst, abs(predict_overlap(sched) - oracle.brute_force_overlap(sched)))
        return worst <= tol, f"{schedules} schedules, max diff {worst:.2e}", {"difference": worst}
    return _timed(6, "transfer recursion equals brute-force weight sum", body)


# 7 ------------------------------------------------------------------------

def chi_square_pvalue(counts, probs) -> float:
    from scipy.stats import chisquare
    counts = np.asarray(counts, dtype=float)
    expected = np.asarray(probs, dtype=float) * counts.sum()
    return float(chisquare(counts, expected).pvalue)


CONDITIONS = ({1: 0}, {2: 1, 5: 0}, {1: 1, 4: 1, 8: 0})


def check_sampler(draws: int = 100_000, cond_draws: int = 20_000, seed: int = 7) -> CheckResult:
    def body():
        n = 8
        T = sample_training_set(n, 1.0, seed=0)
        m, _ = train(T, TruncationPolicy(max_bond=2))
        rows = sample_many(m, draws, seed)
        values = np.zeros(draws, dtype=np.int64)
        for col in range(n):
            values = (values << 1) | rows[:, col]
        odd = int(np.sum(popcount_parity(values.astype(np.uint64))))
        evens = even_strings(n).astype(np.int64)
        counts = np.bincount(values, minlength=1 << n)[evens]
        p_uniform = chi_square_pvalue(counts, np.full(evens.size, 1.0 / evens.size))

        probs = enumerate_probabilities(m)
        everything = unpack_bits(np.arange(1 << n, dtype=np.uint64), n)
        p_cond, outside = [], 0
        for i, cond in enumerate(CONDITIONS):
            match = np.all([everything[:, pos - 1] == b for pos, b in cond.items()], axis=0)
            support = np.flatnonzero(match & (probs > 0))
            got = sample_many(m, cond_draws, seed, cond, trial=i + 1)
            vals = np.zeros(cond_draws, dtype=np.int64)
            for col in range(n):
                vals = (vals << 1) | got[:, col]
            hist = np.bincount(vals, minlength=1 << n)
            outside += int(hist.sum() - hist[support].sum())
            p_cond.append(chi_square_pvalue(hist[support], probs[support] / probs[support].sum()))
        ok = odd == 0 and outside == 0 and p_uniform > SIGNIFICANCE and min(p_cond) > SIGNIFICANCE
        return ok, (f"odd draws={odd}, uniform chi2 p={p_uniform:.3g}, "
                    f"conditional p={', '.join(f'{p:.3g}' for p in p_cond)}, off-support={outside}"), \
            {"odd": odd, "p_uniform": p_uniform, "p_conditional": p_cond}
    return _timed(7, "exact sampling", body)


# 8 ------------------------------------------------------------------------

def enumerate_abs_gap(n: int, r: int) -> Fraction:
    """E|2 d1 - r| by listing every r-subset of a population of n marked and n unmarked items."""
    total, acc = 0, 0
    for subset in itertools.combinations(range(2 * n), r):
        d1 = sum(1 for x in subset if x < n)
        acc += abs(2 * d1 - r)
        total += 1
    return Fraction(acc, total)


def check_hypergeometric(max_n: int = 8, mc_draws: int = 100_000, seed: int = 8) -> CheckResult:
    from .theory import hypergeometric_abs_gap

    def body():
        worst = 0.0
        for n in range(1, max_n + 1):
            for r in range(0, 2 * n + 1):
                worst = max(worst, abs(hypergeometric_abs_gap(n, r) - float(enumerate_abs_gap(n, r))))
        small = hypergeometric_abs_gap(2, 2)
        n_pop, r = 1 << 13, 4096 // 2
        draws = np.random.default_rng(seed).hypergeometric(n_pop, n_pop, r, size=mc_draws)
        gaps = np.abs(2 * draws - r)
        mc, se = float(gaps.mean()), float(gaps.std(ddof=1) / math.sqrt(mc_draws))
        est = expected_G2(16, 4096)
        z = abs(est - mc) / se
        ok = worst <= 1e-12 and z <= 3.0 and abs(small - 2 / 3) <= 1e-12
        return ok, (f"enumeration max diff {worst:.2e}, N=16 N_T=4096: {est:.6f} vs MC {mc:.6f} "
                    f"({z:.2f} SE), n=2 r=2 -> {small:.15f}"), {"enumeration": worst, "z": z}
    return _timed(8, "hypergeometric gap estimator", body)


# 9 ------------------------------------------------------------------------

FIGURE5_GRID = (0.02, 0.04, 0.06, 0.08, 0.1, 0.12, 0.14, 0.16, 0.18, 0.2)


def shape_verdict(fractions, exp_mean, exp_std, theory) -> tuple[bool, str]:
    """Non-increasing (up to one pooled std), and near zero at f=0.5 and f=1 when present."""
    exp_mean, exp_std, theory = (np.asarray(x, dtype=float) for x in (exp_mean, exp_std, theory))
    pooled = float(np.sqrt(np.mean(exp_std ** 2))) if exp_std.size else 0.0
    rise_exp = float(np.max(np.diff(exp_mean), initial=-math.inf))
    rise_th = float(np.max(np.diff(theory), initial=-math.inf))
    ok = rise_exp <= pooled and rise_th <= pooled
    notes = [f"pooled std {pooled:.3g}", f"largest rise exp {rise_exp:.3g} theory {rise_th:.3g}"]
    for f, limit in ((0.5, 0.05), (1.0, 1e-9)):
        hits = [i for i, x in enumerate(fractions) if abs(x - f) < 1e-12]
        if hits:
            i = hits[0]
            ok = ok and exp_mean[i] < limit and theory[i] < limit
            notes.append(f"f={f:g}: exp {exp_mean[i]:.3g} theory {theory[i]:.3g} (< {limit:g})")
    return ok, "; ".join(notes)


def check_figure5(n: int = 16, grid=FIGURE5_GRID, trials: int = 10, seed: int = 2024,
                  output=None, budget: float = 60.0) -> CheckResult:
    def body():
        t0 = time.perf_counter()
        cfg = ExperimentConfig(n=n, grid=tuple(grid) + (0.5, 1.0), trials=trials, seed=seed)
        rec = run_experiment(cfg)
        paths = {}
        if output is not None:
            from .experiment import emit_report
            paths = emit_report(rec, output)
        elapsed = time.perf_counter() - t0
        errors = sum(1 for r in rec.rows if r.error)
        fr = [a.f for a in rec.aggregates]
        ok, detail = shape_verdict(fr, [a.mean_distance for a in rec.aggregates],
                                   [a.std_distance for a in rec.aggregates],
                                   [a.theory.distance for a in rec.aggregates])
        ok = ok and errors == 0 and elapsed < budget and len(rec.rows) == len(cfg.grid) * trials
        if output is not None:
            ok = ok and all(p.exists() for p in paths.values())
        return ok, f"{detail}; row errors {errors}; runtime {elapsed:.1f}s", {"record": rec, "paths": paths}
    return _timed(9, "training-fraction sweep shape", body)


SUITE = {
    1: check_perfect_learning,
    2: check_lossless,
    3: check_oracle_equivalence,
    4: check_two_by_two,
    5: check_replay,
    6: check_transfer_matrix,
    7: check_sampler,
    8: check_hypergeometric,
    9: check_figure5,
}


def run_all(numbers=None) -> list[CheckResult]:
    return [SUITE[i]() for i in (numbers or sorted(SUITE))]
