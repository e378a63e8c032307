"""Pure numpy fallback for the compiled kernels in ``_ckernels.pyx``.

Same signatures, same rotation formulas; row and column updates are
vectorised instead of written as scalar loops.
"""

import math

import numpy as np


def _rotation_tangent(theta):
    if abs(theta) > 1e150:
        return 0.5 / theta
    if theta >= 0.0:
        return 1.0 / (theta + math.sqrt(theta * theta + 1.0))
    return -1.0 / (-theta + math.sqrt(theta * theta + 1.0))


def _safe_ratio(num, den):
    try:
        return num / den
    except (OverflowError, ZeroDivisionError):
        return math.copysign(math.inf, num) * math.copysign(1.0, den)


def jacobi_eigh(a, tol=1e-13, max_sweeps=100):
    A = np.array(a, dtype=np.float64, order="C", copy=True)
    n = A.shape[0]
    V = np.eye(n)
    fro = math.sqrt(float(np.sum(A * A)))
    offdiag = ~np.eye(n, dtype=bool)
    for sweep in range(max_sweeps + 1):
        off = float(np.sum(np.where(offdiag, A * A, 0.0)))
        if math.sqrt(off) <= tol * fro:
            return np.diag(A).copy(), V, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = float(A[p, q])
                if apq == 0.0:
                    continue
                t = _rotation_tangent(_safe_ratio(float(A[q, q]) - float(A[p, p]), 2.0 * apq))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = 0.0
                A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return np.diag(A).copy(), V, -1


def jacobi_svd(a, max_sweeps=100):
    B = np.array(a, dtype=np.float64, copy=True)
    n = B.shape[1]
    V = np.eye(n)
    # columns below this squared norm are numerically zero; rotating them only churns
    tiny = 1e-32 * float(np.sum(B * B))
    for sweep in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                bp, bq = B[:, p], B[:, q]
                alpha = float(bp @ bp)
                beta = float(bq @ bq)
                gamma = float(bp @ bq)
                if gamma == 0.0 or alpha <= tiny or beta <= tiny or abs(gamma) <= 1e-15 * math.sqrt(alpha * beta):
                    continue
                rotated = True
                t = _rotation_tangent(_safe_ratio(beta - alpha, 2.0 * gamma))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                x, y = bp.copy(), bq.copy()
                B[:, p] = c * x - s * y
                B[:, q] = s * x + c * y
                x, y = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * x - s * y
                V[:, q] = s * x + c * y
        if not rotated:
            return B, V, sweep
    return B, V, -1


def sample_chain(tensors, envs, allowed, uniforms):
    mask = np.asarray(allowed, dtype=bool)
    U = np.asarray(uniforms, dtype=np.float64)
    S, N = U.shape
    out = np.zeros((S, N), dtype=np.int64)
    L = np.ones((S, 1))
    rows = np.arange(S)
    for site in range(N):
        A = np.asarray(tensors[site], dtype=np.float64)
        R = np.asarray(envs[site], dtype=np.float64)
        d = A.shape[1]
        cand = np.einsum("si,ixj->sxj", L, A)
        prob = np.einsum("sxi,ij,sxj->sx", cand, R, cand)
        prob = np.where(mask[site][None, :], np.maximum(prob, 0.0), 0.0)
        total = prob.sum(axis=1)
        target = U[:, site] * total
        cum = np.cumsum(prob, axis=1)
        # first positive-mass symbol whose cumulative mass exceeds the target
        hit = (cum > target[:, None]) & (prob > 0.0)
        positive = prob > 0.0
        last = np.where(positive.any(axis=1), d - 1 - np.argmax(positive[:, ::-1], axis=1), 0)
        pick = np.where(hit.any(axis=1), hit.argmax(axis=1), last)
        out[:, site] = pick
        chosen = cand[rows, pick]
        norm = np.sqrt(prob[rows, pick])
        norm[norm <= 0.0] = 1.0
        L = chosen / norm[:, None]
    return out
