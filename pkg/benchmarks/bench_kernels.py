"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel with the best wall time of each backend and the
ratio.  Both backends are imported directly, so the result does not depend
on RESONLAB_BACKEND.
"""
import argparse
import timeit

import numpy as np

from resonlab import _kernels_py
from resonlab.grids import ball_grid, cylinder_grid

try:
    from resonlab import _kernels
except ImportError:
    _kernels = None


def cases():
    g = cylinder_grid((0.25, 0.5), (-0.25, 0.25), 6, 6, 32)
    yield "helmholtz3d_block_row (36 x 36 x 32)", "helmholtz3d_block_row", (
        g.rho, g.zp, g.mweights, g.n_theta, 2.0 + 0.5j)
    b = ball_grid(0.5, 8, 8, 16)
    nodes = np.ascontiguousarray(b.nodes)
    yield f"helmholtz3d_dense ({b.size} nodes)", "helmholtz3d_dense", (nodes, b.weights, 2.0 + 0.5j)
    n = 20000
    rng = np.random.default_rng(0)
    u = rng.standard_normal(n) + 0j
    yield f"line_step ({n} points)", "line_step", (
        u.copy(), u.copy(), np.zeros(n, complex), np.full(n, 1e-4 + 0j), 0.25, 0, n)
    nr, nz = 80, 160
    U = rng.standard_normal((nr, nz)) + 0j
    rho = (np.arange(nr) + 0.5) * 0.025
    yield f"mode_step ({nr} x {nz})", "mode_step", (
        U.copy(), U.copy(), np.zeros_like(U), np.full((nr, nz), 1e-4 + 0j), np.zeros_like(U), False,
        (rho + 0.0125) / rho, (rho - 0.0125) / rho, np.ones(nr), 0.25, 1.0, nr, 0, nz)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels not built; only the fallback is timed")
    for label, name, a in cases():
        t_py = min(timeit.repeat(lambda: getattr(_kernels_py, name)(*a), number=1, repeat=args.repeat))
        if _kernels is None:
            print(f"{label:42s} python {t_py * 1e3:9.2f} ms")
            continue
        t_c = min(timeit.repeat(lambda: getattr(_kernels, name)(*a), number=1, repeat=args.repeat))
        print(f"{label:42s} python {t_py * 1e3:9.2f} ms  cython {t_c * 1e3:9.2f} ms  "
              f"speedup {t_py / t_c:6.1f}x")


if __name__ == "__main__":
    main()
