"""The two-step GADI iteration for ``Ax = b`` and its HSS/DRS instances.

One outer step with splitting ``A = M + N`` is::

    (alpha I + M) x_half = (alpha I - N) x + b
    (alpha I + N) x_new  = (N - (1 - omega) alpha I) x + (2 - omega) alpha x_half

``omega = 0`` gives the HSS (Peaceman-Rachford) scheme and ``omega = 1`` the
Douglas-Rachford scheme when ``M, N`` are the symmetric and skew parts.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .exceptions import BreakdownError, ConfigError, InnerSolveError
from .krylov import LinearOperator, cg, cgne
from .sparse import SparseMatrix, hs_split

SubSolver = Callable[[np.ndarray], tuple]


@dataclass(frozen=True)
class GadiConfig:
    """Parameters of an exact-inner GADI run.

    ``exact_inner_tol`` is the relative tolerance at which the inner Krylov
    solves stand in for direct solves.
    """

    alpha: float
    omega: float = 1.0
    outer_rel_tol: float = 1e-6
    max_outer: int = 5000
    exact_inner_tol: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        validate_alpha_omega(self.alpha, self.omega)
        for name in ("outer_rel_tol", "exact_inner_tol"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1), got {v}")
        if self.max_outer < 1:
            raise ConfigError("max_outer must be at least 1")


def validate_alpha_omega(alpha, omega):
    if not np.isfinite(alpha) or alpha <= 0.0:
        raise ConfigError("alpha must be positive")
    if not (0.0 <= omega < 2.0):
        raise ConfigError(f"omega must lie in [0, 2), got {omega}")


@dataclass
class SolveReport:
    """Outcome of an outer iteration.

    ``residual_history[k]`` is ``||b - A x_k|| / ||b||``; entry 0 is 1 because
    every run starts from zero.
    """

    iterations: int
    residual_history: list
    inner_cg_mean: float
    inner_cgne_mean: float
    wall_time: float
    termination: str
    final_x: np.ndarray
    method: str = ""
    alpha: float = float("nan")
    omega: float = float("nan")
    extra: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.termination == "converged"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["final_x"] = np.asarray(self.final_x).tolist()
        d["residual_history"] = [float(v) for v in self.residual_history]
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "SolveReport":
        d = dict(d)
        d["final_x"] = np.asarray(d["final_x"], dtype=np.float64)
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "SolveReport":
        return cls.from_dict(json.loads(text))


def _exact_solvers(H: SparseMatrix, S: SparseMatrix, alpha: float, tol: float):
    n = H.nrows
    cap = 10 * n + 100
    opH = LinearOperator.from_matrix(H, alpha)
    opS = LinearOperator.from_matrix(S, alpha)

    def solve_h(v):
        x, st = cg(opH, v, None, tol, cap)
        if not st.converged:
            raise InnerSolveError(f"CG did not reach {tol:g} in {cap} iterations")
        return x, st.iterations

    def solve_s(v):
        x, st = cgne(opS, v, None, tol, cap)
        if not st.converged:
            raise InnerSolveError(f"CGNE did not reach {tol:g} in {cap} iterations")
        return x, st.iterations

    return solve_h, solve_s


def _run(A, b, cfg, step, method):
    b = np.asarray(b, dtype=np.float64)
    t0 = time.perf_counter()
    x = np.zeros_like(b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return SolveReport(0, [0.0], 0.0, 0.0, 0.0, "converged", x, method, cfg.alpha, cfg.omega)
    history = [1.0]
    inner = np.zeros(2)
    k = 0
    termination = "max_iter"
    while True:
        if history[-1] <= cfg.outer_rel_tol:
            termination = "converged"
            break
        if k >= cfg.max_outer:
            break
        try:
            x, its = step(x)
        except (BreakdownError, InnerSolveError) as exc:
            raise InnerSolveError(str(exc), step=k) from exc
        inner += its
        k += 1
        history.append(float(np.linalg.norm(b - A.matvec(x)) / bnorm))
    means = inner / k if k else inner
    return SolveReport(k, history, float(means[0]), float(means[1]),
                       time.perf_counter() - t0, termination, x, method,
                       float(cfg.alpha), float(cfg.omega))


def gadi_solve(M: SparseMatrix, N: SparseMatrix, b, cfg: GadiConfig,
               solve_m: SubSolver, solve_n: SubSolver, method: str = "gadi") -> SolveReport:
    """Run the GADI framework for ``(M + N) x = b`` from ``x = 0``.

    Parameters
    ----------
    M, N : SparseMatrix
        Splitting of the system matrix.
    solve_m, solve_n : callable
        ``solve(v) -> (u, inner_iterations)`` for ``(alpha I + M) u = v`` and
        ``(alpha I + N) u = v``.
    """
    A = M + N
    a, w = cfg.alpha, cfg.omega

    def step(x):
        Nx = N.matvec(x)
        x_half, i1 = solve_m(a * x - Nx + b)
        x_new, i2 = solve_n(Nx - (1.0 - w) * a * x + (2.0 - w) * a * x_half)
        return x_new, (i1, i2)

    return _run(A, b, cfg, step, method)


def gadi_hs_solve(A: SparseMatrix, b, cfg: GadiConfig) -> SolveReport:
    """GADI with ``M = H``, ``N = S``; CG for the H-step and CGNE for the S-step."""
    H, S = hs_split(A)
    solve_h, solve_s = _exact_solvers(H, S, cfg.alpha, cfg.exact_inner_tol)
    return gadi_solve(H, S, b, cfg, solve_h, solve_s, method="gadi-hs")


def hss_solve(A: SparseMatrix, b, cfg: GadiConfig) -> SolveReport:
    """HSS in its classical form (``omega`` is ignored and reported as 0)::

        (alpha I + H) x_half = (alpha I - S) x + b
        (alpha I + S) x_new  = (alpha I - H) x_half + b
    """
    cfg = GadiConfig(cfg.alpha, 0.0, cfg.outer_rel_tol, cfg.max_outer,
                     cfg.exact_inner_tol, cfg.seed)
    H, S = hs_split(A)
    solve_h, solve_s = _exact_solvers(H, S, cfg.alpha, cfg.exact_inner_tol)
    a = cfg.alpha

    def step(x):
        x_half, i1 = solve_h(a * x - S.matvec(x) + b)
        x_new, i2 = solve_s(a * x_half - H.matvec(x_half) + b)
        return x_new, (i1, i2)

    return _run(A, b, cfg, step, "hss")


def drs_solve(A: SparseMatrix, b, cfg: GadiConfig) -> SolveReport:
    """Douglas-Rachford splitting: GADI-HS with ``omega = 1``."""
    cfg = GadiConfig(cfg.alpha, 1.0, cfg.outer_rel_tol, cfg.max_outer,
                     cfg.exact_inner_tol, cfg.seed)
    rep = gadi_hs_solve(A, b, cfg)
    rep.method = "drs"
    return rep


class IterationOperators:
    """Applies ``T(alpha)`` and ``T'(alpha, omega)`` of the HS splitting of ``A``.

    ``T = (aI+S)^-1 (aI-H) (aI+H)^-1 (aI-S)`` and
    ``T' = (aI+S)^-1 (aI+H)^-1 (a^2 I + HS - (1-omega) a A)``.
    """

    def __init__(self, A: SparseMatrix, alpha: float, tol: float = 1e-12):
        validate_alpha_omega(alpha, 0.0)
        self.A = A
        self.alpha = float(alpha)
        self.H, self.S = hs_split(A)
        self._solve_h, self._solve_s = _exact_solvers(self.H, self.S, self.alpha, tol)

    def T(self, x):
        a = self.alpha
        u, _ = self._solve_h(a * x - self.S.matvec(x))
        v, _ = self._solve_s(a * u - self.H.matvec(u))
        return v

    def Tprime(self, x, omega):
        a = self.alpha
        w = a * a * x + self.H.matvec(self.S.matvec(x)) - (1.0 - omega) * a * self.A.matvec(x)
        u, _ = self._solve_h(w)
        v, _ = self._solve_s(u)
        return v

    def operator(self, omega=None) -> LinearOperator:
        n = self.A.nrows
        if omega is None:
            return LinearOperator(n, self.T)
        return LinearOperator(n, lambda x: self.Tprime(x, omega))


def apply_T(A: SparseMatrix, alpha: float, x) -> np.ndarray:
    return IterationOperators(A, alpha).T(np.asarray(x, dtype=np.float64))


def apply_Tprime(A: SparseMatrix, alpha: float, omega: float, x) -> np.ndarray:
    validate_alpha_omega(alpha, omega)
    return IterationOperators(A, alpha).Tprime(np.asarray(x, dtype=np.float64), omega)
