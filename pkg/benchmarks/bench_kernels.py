"""Compare the numba kernels with their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--n 3200] [--degree 50] [--repeat 5]

The first numba call (JIT compilation) is excluded from the timings.  The
end-to-end row runs one HCD-Spec fit per backend in a subprocess with
HCDTREE_DISABLE_NUMBA set or unset, so the whole pipeline is measured.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from hcdtree import _kernels as K
from hcdtree.btsbm import build_B, membership, sample_adjacency
from hcdtree.models import derive_model_params


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


END_TO_END = """
import time
from hcdtree import _kernels
from hcdtree.btsbm import sample_adjacency
from hcdtree.hcd import hcd_spec
from hcdtree.models import derive_model_params
g, _, _ = sample_adjacency(derive_model_params(16, {n}, {deg}), 0)
hcd_spec(g, seed=0)  # warm-up (includes JIT)
t = time.perf_counter()
g, _, _ = sample_adjacency(derive_model_params(16, {n}, {deg}), 1)
r = hcd_spec(g, seed=1)
print(_kernels.BACKEND, time.perf_counter() - t, r.n_communities)
"""


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=3200)
    ap.add_argument("--degree", type=float, default=50.0)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-end-to-end", action="store_true")
    args = ap.parse_args()
    if not K.HAS_NUMBA:
        sys.exit("numba is not installed; nothing to compare")

    params = derive_model_params(16, args.n, args.degree)
    g, _, _ = sample_adjacency(params, 0)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(g.n)
    X = rng.standard_normal((g.n, 8))
    pts = rng.standard_normal((g.n, 2))
    centers = pts[:2].copy()
    B, z = build_B(params), membership(params)
    rows = 400
    u = rng.random(sum(g.n - 1 - i for i in range(rows)))

    cases = {
        "csr_matvec": (K.csr_matvec_numpy, K.csr_matvec_numba, (g.indptr, g.indices, x)),
        "csr_matmat": (K.csr_matmat_numpy, K.csr_matmat_numba, (g.indptr, g.indices, X)),
        "sample_rows": (K.sample_rows_numpy, K.sample_rows_numba, (0, rows, g.n, z, B, u)),
        "core_mask": (K.core_mask_numpy, K.core_mask_numba, (g.indptr, g.indices, 40)),
        "component_labels": (K.component_labels_numpy, K.component_labels_numba,
                             (g.indptr, g.indices)),
        "kmeans_assign": (K.assign_numpy, K.assign_numba, (pts, centers)),
    }
    print(f"{'kernel':<18}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, (f_np, f_nb, a) in cases.items():
        f_nb(*a)  # compile
        t_np = best_of(lambda: f_np(*a), args.repeat)
        t_nb = best_of(lambda: f_nb(*a), args.repeat)
        print(f"{name:<18}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.1f}")

    if not args.no_end_to_end:
        code = END_TO_END.format(n=args.n, deg=args.degree)
        for flag in ("0", "1"):
            env = dict(os.environ, HCDTREE_DISABLE_NUMBA=flag)
            out = subprocess.run([sys.executable, "-c", code], env=env, check=True,
                                 capture_output=True, text=True).stdout.split()
            print(f"hcd_spec end-to-end [{out[0]}]: {float(out[1]):.3f} s, K_hat={out[2]}")


if __name__ == "__main__":
    main()
