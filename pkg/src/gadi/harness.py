"""Benchmark problem generators, parameter traversal, and training-set builders.

CSV formats
-----------
* traversal grids: header ``alpha,omega,it,converged`` (``converged`` is 0/1;
  ``it`` of a capped point is the cap)
* training sets: header ``n,alpha``

Floats are written with Python's shortest round-trip representation, so a
write/read cycle is bit-exact.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from . import mmio
from .core import GadiConfig, drs_solve, gadi_hs_solve, hss_solve
from .exceptions import ConfigError, DimensionError, TraversalError
from .inexact import InexactConfig, ihss_solve, practical_gadi_hs
from .sparse import SparseMatrix, hs_split, identity, kron, tridiag
from .sylvester import gadi_ab_solve, sylvester_residual

FAMILIES = ("convdiff3d", "parabolic2d", "sylvester")
METHODS = ("hss", "drs", "gadi-hs", "practical-gadi-hs", "ihss", "gadi-ab")
DEFAULT_CAP = 5000


@dataclass
class ProblemInstance:
    """A generated test problem with a known solution.

    Linear systems fill ``A, b, x_exact``; Sylvester problems fill
    ``A, B, C, x_exact`` with ``x_exact`` a matrix.
    """

    family: str
    n: int
    A: SparseMatrix
    x_exact: np.ndarray
    b: Optional[np.ndarray] = None
    B: Optional[SparseMatrix] = None
    C: Optional[np.ndarray] = None
    r: float = 0.0
    beta: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def is_sylvester(self) -> bool:
        return self.B is not None

    def residual(self) -> float:
        """Relative residual of the stored exact solution."""
        if self.is_sylvester:
            return sylvester_residual(self.A, self.B, self.C, self.x_exact) / np.linalg.norm(self.C)
        return float(np.linalg.norm(self.A.matvec(self.x_exact) - self.b) / np.linalg.norm(self.b))

    def metadata(self) -> dict:
        d = {"family": self.family, "n": self.n, "r": self.r, "beta": self.beta,
             "shape": list(self.A.shape), "nnz": self.A.nnz}
        d.update(self.meta)
        return d

    def export(self, outdir) -> list:
        """Write Matrix Market files plus ``meta.json``; return the paths."""
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "A.mtx"]
        mmio.write_sparse(paths[0], self.A)
        if self.is_sylvester:
            paths += [out / "B.mtx", out / "C.mtx", out / "X_exact.mtx"]
            mmio.write_sparse(paths[1], self.B)
            mmio.write_dense(paths[2], self.C)
            mmio.write_dense(paths[3], self.x_exact)
        else:
            paths += [out / "b.mtx", out / "x_exact.mtx"]
            mmio.write_dense(paths[1], self.b)
            mmio.write_dense(paths[2], self.x_exact)
        meta = out / "meta.json"
        meta.write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")
        return paths + [meta]

    @classmethod
    def load(cls, indir) -> "ProblemInstance":
        d = Path(indir)
        meta = json.loads((d / "meta.json").read_text())
        A = mmio.read_sparse(d / "A.mtx")
        common = dict(family=meta["family"], n=meta["n"], r=meta.get("r", 0.0),
                      beta=meta.get("beta", 0.0))
        if (d / "B.mtx").exists():
            return cls(A=A, B=mmio.read_sparse(d / "B.mtx"), C=mmio.read_dense(d / "C.mtx"),
                       x_exact=mmio.read_dense(d / "X_exact.mtx"), **common)
        return cls(A=A, b=mmio.read_dense(d / "b.mtx")[:, 0],
                   x_exact=mmio.read_dense(d / "x_exact.mtx")[:, 0], **common)


def _check_n(n):
    if int(n) != n or n < 2:
        raise DimensionError(f"n must be an integer >= 2, got {n}")
    return int(n)


def conv_diff_3d(n: int) -> ProblemInstance:
    """Seven-point 3D convection-diffusion matrix of order ``n**3``.

    ``A = T1 (x) I (x) I + I (x) T2 (x) I + I (x) I (x) T3`` with
    ``T1 = Tridiag(-1-beta, 6, -1+beta)``, ``T2 = T3 = Tridiag(-1-beta, 0, -1+beta)``,
    ``beta = 1/(2n+2)``. The exact solution is all ones.
    """
    n = _check_n(n)
    beta = 1.0 / (2 * n + 2)
    I = identity(n)
    T1 = tridiag(n, -1.0 - beta, 6.0, -1.0 + beta)
    T2 = tridiag(n, -1.0 - beta, 0.0, -1.0 + beta)
    A = kron(kron(T1, I), I) + kron(kron(I, T2), I) + kron(kron(I, I), T2)
    x = np.ones(n ** 3)
    return ProblemInstance("convdiff3d", n, A, x, b=A.matvec(x), beta=beta)


def parabolic_2d(n: int) -> ProblemInstance:
    """2D parabolic test matrix of order ``n**2``.

    ``A = I (x) T1 + D1 (x) T2 + D2 (x) T3`` with ``T1 = Tridiag(-1-beta, 4, -1+beta)``,
    ``D1 = Tridiag(0, 0, 1)``, ``D2 = Tridiag(1, 0, 0)``,
    ``T2 = Tridiag(-1/2, -1, 1/2)``, ``T3 = Tridiag(1/2, -1, -1/2)``.
    The exact solution samples ``sin(pi x1) sin(pi x2)`` at ``x_i = i/(n+1)``.
    """
    n = _check_n(n)
    beta = 1.0 / (2 * n + 2)
    I = identity(n)
    T1 = tridiag(n, -1.0 - beta, 4.0, -1.0 + beta)
    D1 = tridiag(n, 0.0, 0.0, 1.0)
    D2 = tridiag(n, 1.0, 0.0, 0.0)
    T2 = tridiag(n, -0.5, -1.0, 0.5)
    T3 = tridiag(n, 0.5, -1.0, -0.5)
    A = kron(I, T1) + kron(D1, T2) + kron(D2, T3)
    s = np.sin(np.pi * np.arange(1, n + 1) / (n + 1))
    x = np.kron(s, s)
    return ProblemInstance("parabolic2d", n, A, x, b=A.matvec(x), beta=beta)


def sylvester_family(n: int, r: float, rhs: str = "identity") -> ProblemInstance:
    """Sylvester test problem ``A = B = M + 2rN + 100/(n+1)**2 I``.

    ``M = Tridiag(-1, 2, -1)`` and ``N = Tridiag(0.5, 0, -0.5)``.

    Parameters
    ----------
    rhs : {"identity", "manufactured"}
        ``"identity"`` uses ``C = I`` with the reference solution from a dense
        Bartels-Stewart solve; ``"manufactured"`` uses ``C = A 1 + 1 B`` with
        the all-ones solution.
    """
    n = _check_n(n)
    if r < 0:
        raise ConfigError("r must be nonnegative")
    M = tridiag(n, -1.0, 2.0, -1.0)
    N = tridiag(n, 0.5, 0.0, -0.5)
    A = M + N.scale(2.0 * r) + identity(n).scale(100.0 / (n + 1) ** 2)
    B = A
    if rhs == "identity":
        C = np.eye(n)
        Ad = A.to_dense()
        X = scipy.linalg.solve_sylvester(Ad, Ad, C)
    elif rhs == "manufactured":
        X = np.ones((n, n))
        C = A.matmat(X) + X @ B.to_dense()
    else:
        raise ConfigError(f"unknown rhs {rhs!r}; use 'identity' or 'manufactured'")
    return ProblemInstance("sylvester", n, A, X, B=B, C=C, r=float(r), meta={"rhs": rhs})


def make_problem(family: str, n: int, r: float = 0.0, rhs: str = "identity") -> ProblemInstance:
    if family == "convdiff3d":
        return conv_diff_3d(n)
    if family == "parabolic2d":
        return parabolic_2d(n)
    if family == "sylvester":
        return sylvester_family(n, r, rhs)
    raise ConfigError(f"unknown family {family!r}; valid: {', '.join(FAMILIES)}")


# solving ---------------------------------------------------------------------


def run_method(problem: ProblemInstance, method: str, alpha: float, omega: float = 0.0, *,
               max_outer: int = DEFAULT_CAP, delta_h: int = 2, delta_s: int = 2,
               outer_rel_tol: float = 1e-6, split=None):
    """Dispatch one solve; returns a SolveReport or SylvesterReport."""
    if method == "gadi-ab":
        if not problem.is_sylvester:
            raise ConfigError("gadi-ab needs a Sylvester problem")
        return gadi_ab_solve(problem.A, problem.B, problem.C, alpha, omega,
                             outer_rel_tol, max_outer)
    if problem.is_sylvester:
        raise ConfigError(f"{method} needs a linear-system problem")
    if method in ("practical-gadi-hs", "ihss"):
        cfg = InexactConfig(alpha, omega if method == "practical-gadi-hs" else 0.0,
                            delta_h, delta_s, outer_rel_tol, max_outer)
        fn = practical_gadi_hs if method == "practical-gadi-hs" else ihss_solve
        return fn(problem.A, problem.b, cfg, split=split)
    solvers = {"hss": hss_solve, "drs": drs_solve, "gadi-hs": gadi_hs_solve}
    if method not in solvers:
        raise ConfigError(f"unknown method {method!r}; valid: {', '.join(METHODS)}")
    cfg = GadiConfig(alpha, {"hss": 0.0, "drs": 1.0}.get(method, omega),
                     outer_rel_tol, max_outer)
    return solvers[method](problem.A, problem.b, cfg)


# traversal -------------------------------------------------------------------


def grid_values(lo: float, hi: float, step: float) -> np.ndarray:
    """Points ``lo, lo+step, ...`` up to ``hi`` inclusive, rounded to 12 digits."""
    if step <= 0 or hi < lo:
        raise ConfigError("grid needs step > 0 and hi >= lo")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(count), 12)


@dataclass(frozen=True)
class GridPoint:
    alpha: float
    omega: float
    it: int
    converged: bool


@dataclass
class TraversalResult:
    grid: list
    best_alpha: float
    best_omega: float
    best_it: int

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "omega", "it", "converged"])
            for g in self.grid:
                w.writerow([repr(float(g.alpha)), repr(float(g.omega)), g.it, int(g.converged)])

    @classmethod
    def from_csv(cls, path) -> "TraversalResult":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        grid = [GridPoint(float(r["alpha"]), float(r["omega"]), int(r["it"]),
                          bool(int(r["converged"]))) for r in rows]
        return _select_best(grid)


def _select_best(grid) -> TraversalResult:
    ok = [g for g in grid if g.converged]
    if not ok:
        raise TraversalError("no grid point converged")
    best = min(ok, key=lambda g: (g.it, g.alpha, g.omega))
    return TraversalResult(list(grid), best.alpha, best.omega, best.it)


def _solve_point(args):
    problem, method, alpha, omega, cap, opts, split = args
    rep = run_method(problem, method, alpha, omega, max_outer=cap, split=split, **opts)
    return GridPoint(float(alpha), float(omega), int(rep.iterations), bool(rep.converged))


def traverse(problem: ProblemInstance, method: str, alpha_grid, omega_grid=None, *,
             omega: float = 0.0, cap: int = DEFAULT_CAP, prune: bool = False, jobs: int = 1,
             **opts) -> TraversalResult:
    """Grid search for the parameters minimizing the outer iteration count.

    Parameters
    ----------
    alpha_grid, omega_grid : (lo, hi, step) or sequence of values
        ``omega_grid=None`` keeps ``omega`` fixed.
    cap : int
        Outer-iteration cap per point; capped points count as not converged.
    prune : bool
        Lower each point's cap to the best count found so far (sequential
        only). The minimizer and its count are unchanged; pruned points are
        recorded as not converged at the reduced cap.
    jobs : int
        Worker processes; results are gathered in grid order.

    Ties go to the smaller alpha, then the smaller omega.
    """
    alphas = grid_values(*alpha_grid) if isinstance(alpha_grid, tuple) else np.asarray(alpha_grid, float)
    if omega_grid is None:
        omegas = np.array([omega])
    elif isinstance(omega_grid, tuple):
        omegas = grid_values(*omega_grid)
        omegas = omegas[omegas < 2.0]
    else:
        omegas = np.asarray(omega_grid, float)
    if len(alphas) == 0 or len(omegas) == 0:
        raise ConfigError("empty parameter grid")
    if np.any(alphas <= 0):
        raise ConfigError("alpha must be positive")
    split = None if problem.is_sylvester else hs_split(problem.A)
    points = [(a, w) for a in alphas for w in omegas]
    if jobs > 1 and not prune:
        args = [(problem, method, a, w, cap, opts, split) for a, w in points]
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            grid = list(ex.map(_solve_point, args, chunksize=max(1, len(args) // (4 * jobs))))
        return _select_best(grid)
    grid = []
    limit = cap
    for a, w in points:
        g = _solve_point((problem, method, a, w, limit, opts, split))
        grid.append(g)
        if prune and g.converged:
            limit = min(limit, g.it)
    return _select_best(grid)


def build_training_set(family: str, method: str, n_schedule: Sequence[int], alpha_grid,
                       omega: float = 0.0, r: float = 0.0, **kw) -> list:
    """Traverse each size in ``n_schedule`` and collect ``(n, best_alpha)`` pairs."""
    if len(n_schedule) == 0:
        raise ConfigError("n_schedule is empty")
    pairs = []
    for n in n_schedule:
        try:
            res = traverse(make_problem(family, n, r), method, alpha_grid, omega=omega, **kw)
        except TraversalError as exc:
            raise TraversalError(f"n={n}: {exc}") from exc
        pairs.append((int(n), float(res.best_alpha)))
    return pairs


def write_training_csv(path, pairs) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "alpha"])
        for n, a in pairs:
            w.writerow([repr(float(n)) if float(n) != int(n) else int(n), repr(float(a))])


def read_training_csv(path) -> list:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames != ["n", "alpha"]:
            raise ConfigError(f"{path}: expected header n,alpha")
        return [(float(r["n"]), float(r["alpha"])) for r in rd]
