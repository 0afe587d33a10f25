"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--tsne]

``--tsne`` additionally runs a full 600-point projection under each backend
in a subprocess (the backend is fixed at import time via AUGBENCH_PURE).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np
import scipy.sparse as sp

from augbench._kernels import _fallback
from augbench.models.trees import SortedColumns

try:
    from augbench._kernels import _core
except ImportError:
    _core = None


def split_inputs(n=3000, d=2000, density=0.01, seed=0):
    rng = np.random.default_rng(seed)
    X = sp.random(n, d, density=density, random_state=seed, format="csr")
    cols = SortedColumns(X)
    y = (rng.random(n) < 0.3).astype(np.float64)
    w = np.ones(n)
    p = rng.random(n)
    feats = np.arange(d, dtype=np.int64)
    return cols, y, w, p - y, p * (1 - p), feats


def tsne_inputs(n=600, seed=0):
    rng = np.random.default_rng(seed)
    Y = rng.normal(size=(n, 2))
    A = rng.random((n, n))
    P = A + A.T
    np.fill_diagonal(P, 0.0)
    return Y, P / P.sum()


def bench(repeat):
    cols, y, w, g, h, feats = split_inputs()
    Y, P = tsne_inputs()
    cases = {
        "best_split_gini": lambda m: m.best_split_gini(
            cols.indptr, cols.rows, cols.values, feats, w, y, float(w.sum()), float(y.sum())),
        "best_split_newton": lambda m: m.best_split_newton(
            cols.indptr, cols.rows, cols.values, feats, w, g, h,
            float(w.sum()), float(g.sum()), float(h.sum()), 1.0, 1.0),
        "tsne_gradient": lambda m: m.tsne_gradient(Y, P, 1.0),
    }
    backends = [("python", _fallback)] + ([("cython", _core)] if _core else [])
    print(f"{'kernel':<20}" + "".join(f"{name:>12}" for name, _ in backends) + "     speedup")
    for kernel, call in cases.items():
        times = [min(timeit.repeat(lambda: call(mod), number=1, repeat=repeat))
                 for _, mod in backends]
        row = f"{kernel:<20}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"   {times[0] / times[1]:>8.1f}x"
        print(row)


TSNE_SNIPPET = (
    "import time, numpy as np; from augbench import BACKEND; from augbench.analysis import tsne;"
    "X = np.random.default_rng(0).normal(size=(600, 50)); t = time.perf_counter();"
    "tsne(X, seed=0); print(f'{BACKEND:<8} full t-SNE n=600: {time.perf_counter() - t:.1f}s')"
)


def bench_tsne():
    sys.stdout.flush()
    for pure in ("1", "0"):
        env = dict(os.environ, AUGBENCH_PURE=pure)
        subprocess.run([sys.executable, "-c", TSNE_SNIPPET], env=env, check=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--tsne", action="store_true")
    args = ap.parse_args()
    if _core is None:
        print("compiled kernels not built; timing the fallback only")
    bench(args.repeat)
    if args.tsne:
        bench_tsne()


if __name__ == "__main__":
    main()
