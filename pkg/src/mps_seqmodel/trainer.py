"""Deterministic inductive training sweep.

At each cut k the training prefixes are summarised by vectors in the bond
space B_{k-1}; the effective reduced density on B_{k-1} (x) V_k is a sum over
suffix groups of outer products, its top eigenvectors become the site
tensor U_k, and the summaries are pushed through U_k.  The last site is the
adjoint of the summarised state (weight included), so with no truncation
the MPS reproduces the empirical state exactly.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .data import TrainingSet, suffix_group_ids
from .errors import ContractViolation, DegenerateBlockError, EmptyModelError, EmptyTrainingSetError
from .linalg import sym_eig
from .mps import MPS
from .theory import AngleSchedule, BlockStats, angles_from_stats, measure_block_stats, parity_block_matrix

log = logging.getLogger(__name__)

NUMERICAL_ZERO_RTOL = 1e-13
BLOCK_LEAK_RTOL = 1e-12


@dataclass(frozen=True)
class TruncationPolicy:
    max_bond: int | None = 2
    cutoff: float = 1e-10
    block_aware: bool = True

    def __post_init__(self):
        if self.max_bond is not None and self.max_bond < 1:
            raise ContractViolation("max_bond must be >= 1")
        if self.cutoff < 0:
            raise ContractViolation("cutoff must be >= 0")


@dataclass
class Truncation:
    tensor: np.ndarray          # (chi_in, d, chi_out), left-isometric
    kept: np.ndarray            # kept eigenvalues
    discarded: float            # trace - sum(kept)
    labels: list | None         # parity label of each new bond index, if known
    warning: str | None = None


@dataclass
class StepDiagnostics:
    k: int
    trace: float
    kept: list[float]
    discarded: float
    stats: BlockStats | None = None
    theta: float | None = None
    phi: float | None = None
    warning: str | None = None
    density: np.ndarray | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        out = {
            "k": self.k,
            "trace": self.trace,
            "kept": list(self.kept),
            "discarded": self.discarded,
            "theta": self.theta,
            "phi": self.phi,
            "warning": self.warning,
        }
        if self.stats is not None:
            out["stats"] = self.stats.as_dict()
        return out


@dataclass
class TrainDiagnostics:
    n: int
    n_t: int
    steps: list[StepDiagnostics] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    elapsed: float = 0.0

    def angles(self) -> AngleSchedule:
        """Measured angles for k = 2..N (None where a block was absent or degenerate)."""
        by_k = {s.k: s for s in self.steps}
        ks = range(2, self.n + 1)
        return AngleSchedule(
            self.n,
            tuple(by_k[k].theta if k in by_k else None for k in ks),
            tuple(by_k[k].phi if k in by_k else None for k in ks),
        )

    def step(self, k: int) -> StepDiagnostics:
        for s in self.steps:
            if s.k == k:
                return s
        raise KeyError(k)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "n_t": self.n_t,
            "elapsed_seconds": self.elapsed,
            "warnings": list(self.warnings),
            "steps": [s.as_dict() for s in self.steps],
        }


def _group_ids(groups) -> np.ndarray:
    ids = getattr(groups, "group", groups)
    return np.asarray(ids, dtype=np.int64)


def effective_density(v, bits_k, groups, d: int = 2) -> np.ndarray:
    """Reduced density on B_{k-1} (x) V_k from summary vectors and suffix groups.

    ``rho = (1/N_T) sum_b u_b u_b^T`` with ``u_b`` the sum of ``v_i (x) e(bit_i)``
    over samples sharing suffix b.  Index order is ``j * d + x``.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] == 0:
        raise EmptyTrainingSetError("effective_density needs at least one summary vector")
    n_t, chi = v.shape
    bits = np.asarray(bits_k, dtype=np.int64)
    gid = _group_ids(groups)
    if bits.shape != (n_t,) or gid.shape != (n_t,):
        raise ContractViolation("bits and group ids must have one entry per sample")
    w = np.zeros((n_t, chi, d))
    w[np.arange(n_t), :, bits] = v
    w = w.reshape(n_t, chi * d)
    order = np.argsort(gid, kind="stable")
    sorted_ids = gid[order]
    starts = np.flatnonzero(np.r_[True, sorted_ids[1:] != sorted_ids[:-1]])
    u = np.add.reduceat(w[order], starts, axis=0)
    rho = u.T @ u / n_t
    return 0.5 * (rho + rho.T)


def _support_label(vec: np.ndarray, labels) -> int | None:
    if labels is None:
        return None
    scale = float(np.max(np.abs(vec)))
    found = {labels[i] for i in np.flatnonzero(np.abs(vec) > 1e-12 * scale)}
    return found.pop() if len(found) == 1 else None


def _is_block_diagonal(rho: np.ndarray, labels) -> bool:
    lab = np.asarray(labels)
    cross = lab[:, None] != lab[None, :]
    scale = float(np.max(np.abs(rho)))
    return not np.any(np.abs(rho[cross]) > BLOCK_LEAK_RTOL * scale)


def truncate_and_extract(rho, policy: TruncationPolicy = TruncationPolicy(), d: int = 2,
                         labels=None) -> Truncation:
    """Keep the top eigenvectors of ``rho`` as a left-isometric site tensor.

    ``labels`` gives the parity sector of each basis index of
    B_{k-1} (x) V_k.  With ``max_bond == 2`` and a block-diagonal density the
    top eigenvector of each sector is kept (even sector first) instead of the
    global top two.
    """
    rho = np.asarray(rho, dtype=np.float64)
    dim = rho.shape[0]
    if dim % d:
        raise ContractViolation(f"density dimension {dim} is not a multiple of d={d}")
    chi_in = dim // d
    trace = float(np.trace(rho))
    spec = sym_eig(rho)
    lam_max = float(spec.eigenvalues[0]) if dim else 0.0
    if not lam_max > 0.0:
        raise EmptyModelError("effective density has no positive eigenvalue")
    floor = max(policy.cutoff, NUMERICAL_ZERO_RTOL) * lam_max

    use_blocks = (
        policy.block_aware
        and policy.max_bond == 2
        and labels is not None
        and None not in labels
        and _is_block_diagonal(rho, labels)
    )
    warning = None
    if use_blocks:
        lab = np.asarray(labels)
        vecs, vals, new_labels, spectra = [], [], [], {}
        for sector in sorted(set(labels)):
            idx = np.flatnonzero(lab == sector)
            sub = rho[np.ix_(idx, idx)]
            if not np.any(sub):
                continue
            block = sym_eig(sub)
            spectra[sector] = block.eigenvalues
            if block.eigenvalues[0] <= floor:
                continue
            vec = np.zeros(dim)
            vec[idx] = block.eigenvectors[:, 0]
            vecs.append(vec)
            vals.append(float(block.eigenvalues[0]))
            new_labels.append(int(sector))
        top_two = sorted(((float(x), s) for s, ev in spectra.items() for x in ev), reverse=True)[:2]
        if len(top_two) == 2 and top_two[0][1] == top_two[1][1] and len(spectra) > 1:
            warning = (
                f"global top-2 eigenvalues both lie in parity sector {top_two[0][1]}; "
                "kept the top eigenvector of each sector"
            )
        kept = np.array(vals)
        basis = np.array(vecs).T if vecs else np.zeros((dim, 0))
    else:
        order = [i for i in range(dim) if spec.eigenvalues[i] > floor]
        if policy.max_bond is not None:
            order = order[: policy.max_bond]
        kept = spec.eigenvalues[order]
        basis = spec.eigenvectors[:, order]
        new_labels = [_support_label(basis[:, c], labels) for c in range(basis.shape[1])]
        if labels is None:
            new_labels = None
    if basis.shape[1] == 0:
        raise EmptyModelError("all eigenvalues fell below the cutoff")
    tensor = basis.reshape(chi_in, d, basis.shape[1])
    return Truncation(tensor, np.asarray(kept), max(trace - float(np.sum(kept)), 0.0), new_labels, warning)


def final_tensor(v, bits_n, n_t: int, d: int = 2) -> np.ndarray:
    """Last site: A[j, x, 0] = (1/sqrt(N_T)) * sum of v_i[j] over samples ending in x."""
    v = np.asarray(v, dtype=np.float64)
    bits = np.asarray(bits_n, dtype=np.int64)
    out = np.zeros((v.shape[1], d, 1))
    for x in range(d):
        out[:, x, 0] = v[bits == x].sum(axis=0)
    return out / math.sqrt(n_t)


def _measure(rho: np.ndarray, bond_labels, n_t: int, step: StepDiagnostics) -> None:
    if bond_labels is None or None in bond_labels:
        return
    if bond_labels.count(0) > 1 or bond_labels.count(1) > 1:
        return
    block, leak = parity_block_matrix(rho, bond_labels)
    stats = measure_block_stats(block, scale=n_t, leakage=leak * n_t)
    step.stats = stats
    try:
        step.theta, step.phi = angles_from_stats(stats)
    except DegenerateBlockError as exc:
        step.warning = f"degenerate block: {exc}"


def train_symbols(symbols, d: int = 2, policy: TruncationPolicy = TruncationPolicy(),
                  record_densities: bool = False) -> tuple[MPS, TrainDiagnostics]:
    """Train on an (N_T, N) array of symbols in range(d)."""
    started = time.perf_counter()
    sym = np.asarray(symbols, dtype=np.int64)
    if sym.ndim != 2 or sym.shape[0] == 0:
        raise EmptyTrainingSetError("training needs at least one sample")
    n_t, n = sym.shape
    if sym.min() < 0 or sym.max() >= d:
        raise ContractViolation(f"symbols must lie in 0..{d - 1}")
    diag = TrainDiagnostics(n, n_t)
    ids = suffix_group_ids(sym, d)

    first = np.eye(d).reshape(1, d, d)
    if n == 1:
        return MPS([final_tensor(np.ones((n_t, 1)), sym[:, 0], n_t, d)]), diag
    tensors = [first]
    v = np.eye(d)[sym[:, 0]]
    labels = [x % 2 for x in range(d)] if d == 2 else None

    for k in range(2, n + 1):
        col = k - 1
        rho = effective_density(v, sym[:, col], ids[k], d)
        step = StepDiagnostics(k, float(np.trace(rho)), [], 0.0)
        if record_densities:
            step.density = rho
        if d == 2:
            _measure(rho, labels, n_t, step)
        if k == n:
            step.kept = [float(np.trace(rho))]
            diag.steps.append(step)
            break
        basis_labels = None if labels is None else [(lab + x) % 2 if lab is not None else None
                                                    for lab in labels for x in range(d)]
        tr = truncate_and_extract(rho, policy, d, basis_labels)
        step.kept = [float(x) for x in tr.kept]
        step.discarded = tr.discarded
        if tr.warning:
            step.warning = tr.warning if step.warning is None else f"{step.warning}; {tr.warning}"
            diag.warnings.append(f"step {k}: {tr.warning}")
            log.warning("step %d: %s", k, tr.warning)
        diag.steps.append(step)
        tensors.append(tr.tensor)
        chi = v.shape[1]
        w = np.zeros((n_t, chi, d))
        w[np.arange(n_t), :, sym[:, col]] = v
        v = w.reshape(n_t, chi * d) @ tr.tensor.reshape(chi * d, -1)
        labels = tr.labels

    tensors.append(final_tensor(v, sym[:, n - 1], n_t, d))
    diag.elapsed = time.perf_counter() - started
    return MPS(tensors), diag


def train(T: TrainingSet, policy: TruncationPolicy = TruncationPolicy(),
          record_densities: bool = False) -> tuple[MPS, TrainDiagnostics]:
    if T.n_t < 1:
        raise EmptyTrainingSetError("training set is empty")
    return train_symbols(T.symbols(), 2, policy, record_densities)
