# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: cyclic Jacobi eigensolver, one-sided Jacobi SVD, chain sampler.

Every function here has a numpy twin in ``_pykernels`` with the same
signature and the same arithmetic order, so both backends agree to rounding.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


def jacobi_eigh(a, double tol=1e-13, int max_sweeps=100):
    """Cyclic Jacobi on a symmetric matrix.

    Returns ``(eigenvalues, eigenvectors, sweeps)``; eigenvalues are in the
    Jacobi output order (unsorted), eigenvectors are the columns.  ``sweeps``
    is -1 if the off-diagonal norm never dropped below ``tol * ||a||_F``.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] A = np.array(a, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = A.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] V = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] Am = A
    cdef double[:, ::1] Vm = V
    cdef Py_ssize_t p, q, k
    cdef int sweep
    cdef double fro = 0.0, off, apq, theta, t, c, s, akp, akq
    cdef bint done = False

    with nogil:
        for p in range(n):
            for q in range(n):
                fro += Am[p, q] * Am[p, q]
        fro = sqrt(fro)
        for sweep in range(max_sweeps + 1):
            off = 0.0
            for p in range(n):
                for q in range(n):
                    if p != q:
                        off += Am[p, q] * Am[p, q]
            if sqrt(off) <= tol * fro:
                done = True
                break
            if sweep == max_sweeps:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = Am[p, q]
                    if apq == 0.0:
                        continue
                    theta = (Am[q, q] - Am[p, p]) / (2.0 * apq)
                    if fabs(theta) > 1e150:
                        t = 0.5 / theta
                    elif theta >= 0.0:
                        t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                    else:
                        t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for k in range(n):
                        akp = Am[k, p]
                        akq = Am[k, q]
                        Am[k, p] = c * akp - s * akq
                        Am[k, q] = s * akp + c * akq
                    for k in range(n):
                        akp = Am[p, k]
                        akq = Am[q, k]
                        Am[p, k] = c * akp - s * akq
                        Am[q, k] = s * akp + c * akq
                    Am[p, q] = 0.0
                    Am[q, p] = 0.0
                    for k in range(n):
                        akp = Vm[k, p]
                        akq = Vm[k, q]
                        Vm[k, p] = c * akp - s * akq
                        Vm[k, q] = s * akp + c * akq
    return np.ascontiguousarray(np.diag(A)), V, (sweep if done else -1)


def jacobi_svd(a, int max_sweeps=100):
    """One-sided (Hestenes) Jacobi on the columns of a tall matrix.

    Returns ``(B, V, sweeps)`` where ``B = a @ V`` has mutually orthogonal
    columns; column norms are the singular values.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2] B = np.array(a, dtype=np.float64, order="F", copy=True)
    cdef Py_ssize_t m = B.shape[0], n = B.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] V = np.asfortranarray(np.eye(n, dtype=np.float64))
    cdef double[::1, :] Bm = B
    cdef double[::1, :] Vm = V
    cdef Py_ssize_t p, q, k
    cdef int sweep
    cdef double alpha, beta, gamma, zeta, t, c, s, x, y, tiny = 0.0
    cdef bint rotated, done = False

    with nogil:
        for q in range(n):
            for k in range(m):
                tiny += Bm[k, q] * Bm[k, q]
        tiny = 1e-32 * tiny
        for sweep in range(max_sweeps):
            rotated = False
            for p in range(n - 1):
                for q in range(p + 1, n):
                    alpha = 0.0
                    beta = 0.0
                    gamma = 0.0
                    for k in range(m):
                        alpha += Bm[k, p] * Bm[k, p]
                        beta += Bm[k, q] * Bm[k, q]
                        gamma += Bm[k, p] * Bm[k, q]
                    if gamma == 0.0 or alpha <= tiny or beta <= tiny or fabs(gamma) <= 1e-15 * sqrt(alpha * beta):
                        continue
                    rotated = True
                    zeta = (beta - alpha) / (2.0 * gamma)
                    if fabs(zeta) > 1e150:
                        t = 0.5 / zeta
                    elif zeta >= 0.0:
                        t = 1.0 / (zeta + sqrt(1.0 + zeta * zeta))
                    else:
                        t = -1.0 / (-zeta + sqrt(1.0 + zeta * zeta))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = c * t
                    for k in range(m):
                        x = Bm[k, p]
                        y = Bm[k, q]
                        Bm[k, p] = c * x - s * y
                        Bm[k, q] = s * x + c * y
                    for k in range(n):
                        x = Vm[k, p]
                        y = Vm[k, q]
                        Vm[k, p] = c * x - s * y
                        Vm[k, q] = s * x + c * y
            if not rotated:
                done = True
                break
    return np.ascontiguousarray(B), np.ascontiguousarray(V), (sweep if done else -1)


def sample_chain(list tensors, list envs, allowed, uniforms):
    """Sequential left-to-right sampling of a batch of strings.

    ``tensors[k]`` has shape (chi_l, d, chi_r); ``envs[k]`` is the right
    environment (chi_r, chi_r) of site k restricted to ``allowed``;
    ``allowed`` is an (N, d) 0/1 mask and ``uniforms`` an (S, N) array in [0, 1).
    """
    cdef const cnp.uint8_t[:, ::1] mask = np.ascontiguousarray(allowed, dtype=np.uint8)
    cdef const double[:, ::1] U = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef Py_ssize_t S = U.shape[0], N = U.shape[1]
    cdef Py_ssize_t chimax = 1, site, smp, x, i, j, chi_l, chi_r, d, pick
    for site in range(N):
        chimax = max(chimax, tensors[site].shape[0], tensors[site].shape[2])
    d = tensors[0].shape[1]

    out_arr = np.zeros((S, N), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef double[:, ::1] L = np.zeros((S, chimax), dtype=np.float64)
    cdef double[:, ::1] cand = np.zeros((d, chimax), dtype=np.float64)
    cdef double[::1] prob = np.zeros(d, dtype=np.float64)
    cdef const double[:, :, ::1] A
    cdef const double[:, ::1] R
    cdef double total, acc, target, rv, norm

    for smp in range(S):
        L[smp, 0] = 1.0

    for site in range(N):
        A = np.ascontiguousarray(tensors[site], dtype=np.float64)
        R = np.ascontiguousarray(envs[site], dtype=np.float64)
        chi_l = A.shape[0]
        chi_r = A.shape[2]
        with nogil:
            for smp in range(S):
                total = 0.0
                for x in range(d):
                    prob[x] = 0.0
                    if not mask[site, x]:
                        continue
                    for j in range(chi_r):
                        acc = 0.0
                        for i in range(chi_l):
                            acc = acc + L[smp, i] * A[i, x, j]
                        cand[x, j] = acc
                    acc = 0.0
                    for i in range(chi_r):
                        rv = 0.0
                        for j in range(chi_r):
                            rv = rv + R[i, j] * cand[x, j]
                        acc = acc + cand[x, i] * rv
                    if acc < 0.0:
                        acc = 0.0
                    prob[x] = acc
                    total = total + acc
                target = U[smp, site] * total
                pick = -1
                acc = 0.0
                for x in range(d):
                    if prob[x] <= 0.0:
                        continue
                    acc = acc + prob[x]
                    pick = x
                    if target < acc:
                        break
                if pick < 0:
                    pick = 0
                out[smp, site] = pick
                norm = sqrt(prob[pick]) if prob[pick] > 0.0 else 1.0
                for j in range(chi_r):
                    L[smp, j] = cand[pick, j] / norm
    return out_arr
