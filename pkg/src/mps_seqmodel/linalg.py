"""Small dense symmetric eigenproblems and SVD.

All matrices in this package are tiny (at most ``2 * chi_max`` on a side in
training, a few hundred in the dense oracle), so the kernels are plain
Jacobi methods.  The rotation loops live in the compiled extension when it
is available, see ``_backend``.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from ._backend import kernels
from .errors import ContractViolation, ConvergenceError

JACOBI_TOL = 1e-13
MAX_SWEEPS = 100
DEGENERACY_RTOL = 1e-12
SYMMETRY_RTOL = 1e-12


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns


class TwoByTwoEig(NamedTuple):
    lam_plus: float
    lam_minus: float
    e_plus: np.ndarray
    e_minus: np.ndarray
    degenerate: bool


def _as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ContractViolation(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractViolation("matrix has non-finite entries")
    return a


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so that its largest-magnitude entry is positive."""
    v = np.array(vectors, dtype=np.float64, copy=True)
    if v.size == 0:
        return v
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return v * signs


def descending_order(values, rtol: float = DEGENERACY_RTOL) -> list[int]:
    """Indices sorting ``values`` descending; near-ties keep the lower index."""
    vals = np.asarray(values, dtype=np.float64)
    if vals.size == 0:
        return []
    tol = rtol * max(float(np.max(np.abs(vals))), np.finfo(float).tiny)
    remaining = list(range(vals.size))
    order = []
    while remaining:
        top = max(vals[i] for i in remaining)
        pick = min(i for i in remaining if vals[i] >= top - tol)
        order.append(pick)
        remaining.remove(pick)
    return order


def sym_eig(m) -> SpectralDecomposition:
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi.

    Eigenvalues come back sorted descending, eigenvectors as orthonormal
    columns with their largest entry positive.
    """
    a = _as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ContractViolation(f"sym_eig needs a square matrix, got {a.shape}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if a.size and float(np.max(np.abs(a - a.T))) > SYMMETRY_RTOL * scale:
        raise ContractViolation("sym_eig input is not symmetric")
    a = 0.5 * (a + a.T)
    vals, vecs, sweeps = kernels.jacobi_eigh(a, JACOBI_TOL, MAX_SWEEPS)
    if sweeps < 0:
        raise ConvergenceError(f"Jacobi did not converge in {MAX_SWEEPS} sweeps")
    order = descending_order(vals)
    return SpectralDecomposition(np.asarray(vals)[order], fix_signs(np.asarray(vecs)[:, order]))


def degenerate_pairs(eigenvalues, rtol: float = DEGENERACY_RTOL) -> list[tuple[int, int]]:
    """Adjacent index pairs of a sorted spectrum that coincide within ``rtol``."""
    lam = np.asarray(eigenvalues, dtype=np.float64)
    if lam.size < 2:
        return []
    tol = rtol * max(float(np.max(np.abs(lam))), np.finfo(float).tiny)
    return [(i, i + 1) for i in range(lam.size - 1) if abs(lam[i] - lam[i + 1]) <= tol]


def _complete_basis(q: np.ndarray, filled: np.ndarray) -> np.ndarray:
    """Replace the columns of ``q`` not marked ``filled`` by an orthonormal completion."""
    m = q.shape[0]
    out = q.copy()
    basis = [out[:, j] for j in range(out.shape[1]) if filled[j]]
    candidates = iter(np.eye(m))
    for j in range(out.shape[1]):
        if filled[j]:
            continue
        for e in candidates:
            w = e.copy()
            for _ in range(2):
                for b in basis:
                    w -= (b @ w) * b
            nrm = np.linalg.norm(w)
            if nrm > 1e-8:
                out[:, j] = w / nrm
                basis.append(out[:, j])
                break
    return out


def svd(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``m = left @ diag(singulars) @ right.T`` by one-sided Jacobi.

    ``left`` is (rows, r), ``right`` is (cols, r) with r = min(rows, cols);
    singular values are nonnegative and descending.
    """
    a = _as_matrix(m)
    rows, cols = a.shape
    if rows == 0 or cols == 0:
        raise ContractViolation(f"svd of an empty matrix {a.shape}")
    if rows < cols:
        right, sig, left = svd(a.T)
        return left, sig, right
    B, V, sweeps = kernels.jacobi_svd(a, MAX_SWEEPS)
    if sweeps < 0:
        raise ConvergenceError(f"one-sided Jacobi did not converge in {MAX_SWEEPS} sweeps")
    sig = np.linalg.norm(B, axis=0)
    order = descending_order(sig)
    sig = sig[order]
    B = B[:, order]
    V = V[:, order]
    scale = sig[0] if sig[0] > 0 else 1.0
    nonzero = sig > 1e-14 * scale
    left = np.zeros_like(B)
    left[:, nonzero] = B[:, nonzero] / sig[nonzero]
    if not np.all(nonzero):
        left = _complete_basis(left, nonzero)
        sig = np.where(nonzero, sig, 0.0)
    # pair signs: make each right singular vector's dominant entry positive
    signs = np.sign(V[np.argmax(np.abs(V), axis=0), np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return left * signs, sig, V * signs


def two_by_two_eig(d1: float, d2: float, s: float, n_total: float | None = None) -> TwoByTwoEig:
    """Closed-form eigenpairs of ``(1/n_total) [[d1, s], [s, d2]]``.

    ``n_total`` defaults to the trace ``d1 + d2`` (the edge count of the
    bipartite sample graph).  Eigenvectors are unit length; both
    algebraically equivalent forms of each vector are kept and the one
    without cancellation is used.
    """
    if n_total is None:
        n_total = d1 + d2
    if n_total == 0:
        n_total = 1.0
    gap = d1 - d2
    root = math.sqrt(gap * gap + 4.0 * s * s)
    lam_plus = (d1 + d2 + root) / (2.0 * n_total)
    lam_minus = (d1 + d2 - root) / (2.0 * n_total)
    if gap >= 0:
        e_plus = np.array([root + gap, 2.0 * s])
        e_minus = np.array([2.0 * s, -(root + gap)])
    else:
        e_plus = np.array([2.0 * s, root - gap])
        e_minus = np.array([root - gap, -2.0 * s])
    scale = max(abs(d1), abs(d2), abs(s))
    degenerate = root <= DEGENERACY_RTOL * scale or scale == 0
    if degenerate:
        e_plus = np.array([1.0, 0.0])
        e_minus = np.array([0.0, 1.0])
    e_plus = fix_signs((e_plus / np.linalg.norm(e_plus))[:, None])[:, 0]
    e_minus = fix_signs((e_minus / np.linalg.norm(e_minus))[:, None])[:, 0]
    return TwoByTwoEig(lam_plus, lam_minus, e_plus, e_minus, bool(degenerate))
