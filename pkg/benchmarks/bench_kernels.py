"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from mps_seqmodel._backend import compiled_kernels, python_kernels
from mps_seqmodel.data import sample_training_set
from mps_seqmodel.mps import _constraint_mask, right_environments
from mps_seqmodel.trainer import train


def cases(rng):
    sym = {}
    for n in (8, 32, 64):
        a = rng.standard_normal((n, n))
        sym[n] = a + a.T
    tall = rng.standard_normal((128, 24))
    m, _ = train(sample_training_set(16, 0.5, seed=1))
    mask = _constraint_mask(m, None)
    envs = right_environments(m, mask)
    uniforms = rng.random((20000, m.n))
    out = [(f"jacobi_eigh {n}x{n}", "jacobi_eigh", (a,)) for n, a in sym.items()]
    out.append(("jacobi_svd 128x24", "jacobi_svd", (tall,)))
    out.append(("sample_chain N=16 x20000", "sample_chain", (list(m.tensors), envs, mask, uniforms)))
    return out


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if compiled_kernels is None:
        print("compiled extension not built; only the fallback can be timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'python [ms]':>12s} {'compiled [ms]':>14s} {'speedup':>8s}")
    for label, name, argv in cases(rng):
        py = min(timeit.repeat(lambda: getattr(python_kernels, name)(*argv), number=1, repeat=args.repeat))
        if compiled_kernels is None:
            print(f"{label:28s} {py * 1e3:12.2f} {'-':>14s} {'-':>8s}")
            continue
        c = min(timeit.repeat(lambda: getattr(compiled_kernels, name)(*argv), number=1, repeat=args.repeat))
        print(f"{label:28s} {py * 1e3:12.2f} {c * 1e3:14.2f} {py / c:8.1f}x")


if __name__ == "__main__":
    main()
