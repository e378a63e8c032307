"""Dense brute-force references for small N.

Everything here builds full state vectors or full reduced densities, so it
is exponential in N and guarded by hard size limits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .data import TrainingSet, even_strings, unpack_bits
from .errors import AmbiguousReconstructionError, ContractViolation, MemoryGuardError
from .linalg import degenerate_pairs, svd, sym_eig
from .mps import MPS
from .theory import AngleSchedule, string_weight

MAX_STATE_BITS = 20
MAX_REDUCED_BITS = 12
MAX_FACTORIZE_BITS = 14
EIG_ZERO = 1e-12


@dataclass
class DenseState:
    n: int
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def as_tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n)


def dense_state(T: TrainingSet) -> DenseState:
    """Empirical state: 1/sqrt(N_T) on every training string."""
    if T.n > MAX_STATE_BITS:
        raise MemoryGuardError(f"dense state limited to N <= {MAX_STATE_BITS}")
    psi = np.zeros(1 << T.n)
    psi[T.samples.astype(np.int64)] = 1.0 / math.sqrt(T.n_t)
    return DenseState(T.n, psi)


def dense_reduced_density(psi: DenseState, k: int) -> np.ndarray:
    """Partial trace over sites k+1..N: rho[a, a'] = sum_b psi(a, b) psi(a', b)."""
    if k > MAX_REDUCED_BITS:
        raise MemoryGuardError(f"dense reduced density limited to k <= {MAX_REDUCED_BITS}")
    if not 1 <= k <= psi.n:
        raise ContractViolation(f"cut {k} outside 1..{psi.n}")
    m = psi.amplitudes.reshape(1 << k, 1 << (psi.n - k))
    return m @ m.T


def suffix_reduced_density(psi: DenseState, k: int) -> np.ndarray:
    """Partial trace over sites 1..k (density on the suffix)."""
    if psi.n - k > MAX_REDUCED_BITS:
        raise MemoryGuardError(f"dense reduced density limited to {MAX_REDUCED_BITS} sites")
    m = psi.amplitudes.reshape(1 << k, 1 << (psi.n - k))
    return m.T @ m


def marginal_by_counting(T: TrainingSet, k: int) -> np.ndarray:
    """Empirical distribution of length-k prefixes, by direct counting."""
    counts = np.zeros(1 << k)
    for s in T.samples.tolist():
        counts[s >> (T.n - k)] += 1
    return counts / T.n_t


def dense_mps_factorize(psi: DenseState, max_bond: int | None = None, cutoff: float = 0.0) -> MPS:
    """Left-canonical MPS by successive reshape and SVD.

    Singular values with sigma^2 below ``cutoff * sigma_max^2`` (or numerically
    zero) are dropped, then at most ``max_bond`` are kept.
    """
    if psi.n > MAX_FACTORIZE_BITS:
        raise MemoryGuardError(f"dense factorization limited to N <= {MAX_FACTORIZE_BITS}")
    n = psi.n
    rest = psi.amplitudes.reshape(1, -1)
    tensors = []
    for _ in range(n - 1):
        chi = rest.shape[0]
        mat = rest.reshape(chi * 2, -1)
        left, sig, right = svd(mat)
        top = sig[0] if sig[0] > 0 else 1.0
        keep = [i for i in range(sig.size) if sig[i] ** 2 > max(cutoff, 1e-26) * top ** 2]
        if not keep:
            keep = [0]
        if max_bond is not None:
            keep = keep[:max_bond]
        tensors.append(left[:, keep].reshape(chi, 2, len(keep)))
        rest = sig[keep, None] * right[:, keep].T
    tensors.append(rest.reshape(rest.shape[0], 2, 1))
    return MPS(tensors)


def reconstruct_from_reduced(rho_a, rho_b, spectrum_tol: float = 1e-9) -> DenseState:
    """Glue eigenvectors of the prefix and suffix densities along shared eigenvalues.

    psi' = sum_i eps_i sqrt(lambda_i) e_i (x) f_i.  The per-pair signs eps_i are
    chosen to minimise the number of negative amplitudes; an exact tie goes to
    the candidate whose first nonzero amplitude is positive.
    """
    ea, eb = sym_eig(rho_a), sym_eig(rho_b)
    top = max(float(ea.eigenvalues[0]), float(eb.eigenvalues[0]), 1e-300)
    ra = int(np.sum(ea.eigenvalues > EIG_ZERO * top))
    rb = int(np.sum(eb.eigenvalues > EIG_ZERO * top))
    if ra != rb or np.max(np.abs(ea.eigenvalues[:ra] - eb.eigenvalues[:rb]), initial=0.0) > spectrum_tol:
        raise ContractViolation("reduced densities do not share a spectrum")
    lam = ea.eigenvalues[:ra]
    if degenerate_pairs(lam, rtol=1e-9):
        raise AmbiguousReconstructionError("repeated eigenvalue: gluing is not unique")
    terms = [math.sqrt(max(lam[i], 0.0)) * np.kron(ea.eigenvectors[:, i], eb.eigenvectors[:, i]) for i in range(ra)]
    terms = np.array(terms)
    na, nb = rho_a.shape[0], rho_b.shape[0]
    n = int(round(math.log2(na * nb)))

    def badness(signs):
        psi = signs @ terms
        neg = int(np.sum(psi < -1e-12))
        nz = np.flatnonzero(np.abs(psi) > 1e-12)
        first_negative = int(nz.size > 0 and psi[nz[0]] < 0)
        return neg, first_negative

    best, best_key = None, None
    if ra <= 16:
        for signs in itertools.product((1.0, -1.0), repeat=ra):
            signs = np.array(signs)
            key = badness(signs)
            if best_key is None or key < best_key:
                best, best_key = signs, key
    else:
        signs = np.ones(ra)
        improved = True
        while improved:
            improved = False
            for i in range(ra):
                trial = signs.copy()
                trial[i] = -trial[i]
                if badness(trial) < badness(signs):
                    signs, improved = trial, True
        best = signs
    return DenseState(n, best @ terms)


def von_neumann_entropy(rho) -> float:
    """-sum lambda ln lambda over eigenvalues above 1e-15."""
    r = np.asarray(rho, dtype=np.float64)
    if abs(float(np.trace(r)) - 1.0) > 1e-9:
        raise ContractViolation(f"entropy needs unit trace, got {np.trace(r)}")
    lam = sym_eig(r).eigenvalues
    lam = lam[lam > 1e-15]
    return float(-np.sum(lam * np.log(lam)))


def brute_force_overlap(angles: AngleSchedule, n: int | None = None) -> float:
    """Sum of string weights over all of E^N, divided by sqrt(2^(N-1))."""
    n = angles.n if n is None else n
    total = sum(string_weight(row, angles) for row in unpack_bits(even_strings(n), n))
    return total / math.sqrt(2.0 ** (n - 1))


def brute_force_overlap_mps(m1: MPS, m2: MPS) -> float:
    """sum_s amp1(s) amp2(s) over all d**N strings."""
    return float(m1.to_dense() @ m2.to_dense())


def shared_continuations(T: TrainingSet, k: int) -> dict[tuple[int, int], int]:
    """|T_{a,a'}| for every prefix pair, by a direct double loop over samples."""
    out: dict[tuple[int, int], int] = {}
    shift = T.n - k
    mask = (1 << shift) - 1
    vals = T.samples.tolist()
    for x in vals:
        for y in vals:
            if x & mask == y & mask:
                key = (x >> shift, y >> shift)
                out[key] = out.get(key, 0) + 1
    return out
