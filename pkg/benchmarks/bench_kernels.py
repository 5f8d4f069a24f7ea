"""Time the compiled kernels against the NumPy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--n 24] [--repeat 5]

Each kernel runs on the same inputs under both backends; the table reports
the best wall time of ``--repeat`` runs and the speedup of the compiled
version. A solver-level row times one practical GADI-HS solve per backend in
a subprocess, since the backend is fixed at import.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from gadi import _backend
from gadi.harness import conv_diff_3d
from gadi.sparse import hs_split


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def _cases(n):
    A = conv_diff_3d(n).A
    H, S = hs_split(A)
    St = S.transpose()
    N = A.nrows
    rng = np.random.default_rng(0)
    b = rng.standard_normal(N)
    x0 = np.zeros(N)
    m = 40 * n
    lu_rhs = rng.standard_normal((m, m))
    ab = np.zeros((4, m))
    ab[1, 1:] = -1.3
    ab[2, :] = 4.0
    ab[3, :-1] = -1.0

    def cases(k):
        lu, piv, _ = k.banded_lu_factor(ab.copy(), 1, 1)
        return {
            f"csr_matvec (N={N})": lambda: k.csr_matvec(A.indptr, A.indices, A.data, b),
            "cg_shifted (alpha=1, tol 1e-8)":
                lambda: k.cg_shifted(H.indptr, H.indices, H.data, 1.0, b, x0, 1e-8, 10 * N),
            "cgne_shifted (alpha=1, tol 1e-8)":
                lambda: k.cgne_shifted(S.indptr, S.indices, S.data, St.indptr, St.indices,
                                       St.data, 1.0, b, x0, 1e-8, 10 * N),
            f"banded_lu_factor (m={m})": lambda: k.banded_lu_factor(ab.copy(), 1, 1),
            f"banded_lu_solve (m={m}, {m} rhs)": lambda: k.banded_lu_solve(lu, piv, 1, 1, lu_rhs),
        }
    return cases


def _solver_time(n, backend):
    code = ("import time; from gadi.harness import conv_diff_3d, run_method;"
            f"p = conv_diff_3d({n}); t = time.perf_counter();"
            "run_method(p, 'practical-gadi-hs', 0.3, 1.0);"
            "print(time.perf_counter() - t)")
    env = dict(os.environ, GADI_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True)
    return float(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=24, help="conv-diff grid size (N = n^3)")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    try:
        cy = _backend.get_kernels("cython")
    except ImportError:
        sys.exit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    py = _backend.get_kernels("python")
    cases = _cases(args.n)
    cy_cases, py_cases = cases(cy), cases(py)

    print(f"{'kernel':40s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name in cy_cases:
        tp = _best(py_cases[name], args.repeat)
        tc = _best(cy_cases[name], args.repeat)
        print(f"{name:40s} {1e3 * tp:12.3f} {1e3 * tc:12.3f} {tp / tc:8.1f}")
    tp, tc = _solver_time(args.n, "python"), _solver_time(args.n, "cython")
    print(f"{'practical GADI-HS solve':40s} {1e3 * tp:12.1f} {1e3 * tc:12.1f} {tp / tc:8.1f}")


if __name__ == "__main__":
    main()
