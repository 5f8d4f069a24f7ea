"""Practical (inexact) GADI-HS with loose inner CG/CGNE solves.

Each outer step computes ``r = b - A x``, then

* CG:   ``(alpha I + H) z ~= r`` until ``||r - (alpha I + H) z|| <= 10**-delta_h ||r||``
* CGNE: ``(alpha I + S) y ~= alpha (2 - omega) z`` to ``10**-delta_s`` relative
* ``x <- x + y``

Inner solves start from zero. With ``omega = 0`` this is inexact HSS.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import SolveReport, validate_alpha_omega
from .exceptions import BreakdownError, ConfigError, InnerSolveError
from .krylov import LinearOperator, cg, cgne
from .sparse import SparseMatrix, hs_split


@dataclass(frozen=True)
class InexactConfig:
    """Settings for :func:`practical_gadi_hs`.

    ``inner_max_iter=None`` means ``ceil(10 * sqrt(n))`` for an ``n``-unknown
    system. Hitting that cap is counted in the report, not raised.
    """

    alpha: float
    omega: float = 1.9
    delta_h: int = 2
    delta_s: int = 2
    outer_rel_tol: float = 1e-6
    max_outer: int = 5000
    inner_max_iter: Optional[int] = None

    def __post_init__(self):
        validate_alpha_omega(self.alpha, self.omega)
        if self.delta_h < 1 or self.delta_s < 1:
            raise ConfigError("delta_h and delta_s must be at least 1")
        if not 0.0 < self.outer_rel_tol < 1.0:
            raise ConfigError("outer_rel_tol must lie in (0, 1)")
        if self.max_outer < 1:
            raise ConfigError("max_outer must be at least 1")


def practical_gadi_hs(A: SparseMatrix, b, cfg: InexactConfig, *, split=None,
                      method: str = "practical-gadi-hs") -> SolveReport:
    """Solve ``A x = b`` by inexact GADI-HS from ``x = 0``.

    ``split`` may pass a precomputed ``(H, S)`` to skip the split when the
    same matrix is solved many times (e.g. during a parameter traversal).
    """
    H, S = split if split is not None else hs_split(A)
    b = np.asarray(b, dtype=np.float64)
    n = A.nrows
    cap = cfg.inner_max_iter or int(math.ceil(10.0 * math.sqrt(n)))
    a, w = cfg.alpha, cfg.omega
    tol_h, tol_s = 10.0 ** -cfg.delta_h, 10.0 ** -cfg.delta_s
    opH = LinearOperator.from_matrix(H, a)
    opS = LinearOperator.from_matrix(S, a)

    t0 = time.perf_counter()
    x = np.zeros(n)
    bnorm = np.linalg.norm(b)
    history = [1.0 if bnorm > 0 else 0.0]
    cg_total = cgne_total = cap_hits = 0
    k = 0
    termination = "max_iter"
    r = b.copy()
    while True:
        if history[-1] <= cfg.outer_rel_tol:
            termination = "converged"
            break
        if k >= cfg.max_outer:
            break
        try:
            z, st_h = cg(opH, r, None, tol_h, cap)
            y, st_s = cgne(opS, a * (2.0 - w) * z, None, tol_s, cap)
        except BreakdownError as exc:
            raise InnerSolveError(str(exc), step=k) from exc
        cap_hits += (not st_h.converged) + (not st_s.converged)
        cg_total += st_h.iterations
        cgne_total += st_s.iterations
        x += y
        k += 1
        r = b - A.matvec(x)
        res = np.linalg.norm(r) / bnorm
        if not np.isfinite(res):
            termination = "diverged"
            history.append(float(res))
            break
        history.append(float(res))
    return SolveReport(
        k, history,
        cg_total / k if k else 0.0,
        cgne_total / k if k else 0.0,
        time.perf_counter() - t0, termination, x, method, float(a), float(w),
        extra={"delta_h": cfg.delta_h, "delta_s": cfg.delta_s,
               "inner_max_iter": cap, "inner_cap_hits": cap_hits},
    )


def ihss_solve(A: SparseMatrix, b, cfg: InexactConfig, *, split=None) -> SolveReport:
    """Inexact HSS: :func:`practical_gadi_hs` with ``omega`` forced to 0."""
    cfg = InexactConfig(cfg.alpha, 0.0, cfg.delta_h, cfg.delta_s, cfg.outer_rel_tol,
                        cfg.max_outer, cfg.inner_max_iter)
    return practical_gadi_hs(A, b, cfg, split=split, method="ihss")
