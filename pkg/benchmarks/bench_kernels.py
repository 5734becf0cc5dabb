"""Compare the compiled and pure-Python smoother and ILU(0) kernels.

Usage: ``python3 benchmarks/bench_kernels.py [--n 20 40 80] [--repeat 3]``

Matrices are the piecewise-constant A0 operator on structured grids with
``n`` squares per side (``2 n^2`` elements), the matrix the multigrid
smoother runs on, plus an RDA m=2 system for ILU(0).
"""
import argparse
import time

import numpy as np

from rda.dgcore import assemble_a0, assemble_rda
from rda.mesh import gen_tri_mesh
from rda.patch import build_patches, default_threshold
from rda.problems import get_problem
from rda.recon import build_operator
from rda.solve import _kernels_py as pure
from rda.solve.csr import as_csr, diagonal_pointers, index_arrays, with_diagonal

try:
    from rda.solve import _kernels as compiled
except ImportError:
    compiled = None

SQUARE = ((-1.0, 1.0), (-1.0, 1.0))


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def gs_case(impl, A, sweeps=10):
    ip, ix = index_arrays(A)
    b = np.ones(A.shape[0])

    def run():
        x = np.zeros_like(b)
        impl.gs_sweeps(ip, ix, A.data, x, b, sweeps, False)
        impl.gs_sweeps(ip, ix, A.data, x, b, sweeps, True)
    return run


def ilu_case(impl, A):
    ip, ix = index_arrays(A)
    dp = diagonal_pointers(A).astype(ip.dtype)
    b = np.ones(A.shape[0])

    def run():
        vals = A.data.copy()
        impl.ilu0_factor(ip, ix, vals, dp, 0.0)
        impl.ilu0_solve(ip, ix, vals, dp, b)
    return run


def rda_matrix(n):
    mesh = gen_tri_mesh(SQUARE, n)
    op = build_operator(mesh, build_patches(mesh, default_threshold(2, 2, "tri")), 2)
    return with_diagonal(as_csr(assemble_rda(mesh, op, get_problem("example4")).A_mat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[20, 40, 80])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    impls = [("python", pure)] + ([("cython", compiled)] if compiled is not None else [])
    if compiled is None:
        print("compiled extension not built; timing the pure-Python kernels only")
    header = f"{'kernel':<22}{'n_e':>8}{'nnz':>10}" + "".join(f"{name:>12}" for name, _ in impls)
    if len(impls) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for n in args.n:
        A0 = with_diagonal(as_csr(assemble_a0(gen_tri_mesh(SQUARE, n)).A_mat))
        Ar = rda_matrix(n)
        for label, A, make in (("gs 10+10 sweeps (A0)", A0, gs_case),
                               ("ilu0 factor+solve", Ar, ilu_case)):
            times = [best_of(make(impl, A), args.repeat) for _, impl in impls]
            line = f"{label:<22}{A.shape[0]:>8}{A.nnz:>10}" + "".join(f"{t:>11.4f}s" for t in times)
            if len(times) == 2:
                line += f"{times[0] / times[1]:>9.1f}x"
            print(line)


if __name__ == "__main__":
    main()
