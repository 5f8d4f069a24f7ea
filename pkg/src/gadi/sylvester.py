"""GADI-AB for the continuous Sylvester equation ``A X + X B = C``.

One outer step is::

    (a I + A) X_half = X (a I - B) + C
    X_new (a I + B)  = X (B - (1 - w) a I) + (2 - w) a X_half

The second half-step is solved transposed, ``(a I + B)^T X_new^T = RHS^T``, so
both steps are multi-right-hand-side solves with a factored band matrix.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ._backend import kernels
from .core import validate_alpha_omega
from .exceptions import DimensionError, SingularMatrixError
from .krylov import LinearOperator, cgne
from .sparse import SparseMatrix, identity

# band LU is used up to this total bandwidth; wider matrices use CGNE solves
MAX_BAND = 64


class BandedLU:
    """Partial-pivoted LU factors of a band matrix (LAPACK ``gbtrf`` layout)."""

    def __init__(self, lu, piv, kl, ku):
        self.lu = lu
        self.piv = piv
        self.kl = kl
        self.ku = ku
        self.n = lu.shape[1]

    def solve(self, b):
        b = np.asarray(b, dtype=np.float64)
        if b.shape[0] != self.n:
            raise DimensionError(f"rhs has {b.shape[0]} rows, factor has {self.n}")
        vec = b.ndim == 1
        x = kernels.banded_lu_solve(self.lu, self.piv, self.kl, self.ku,
                                    np.ascontiguousarray(b[:, None] if vec else b))
        return x[:, 0] if vec else x


def banded_lu_factor(A: SparseMatrix, lower_bw=None, upper_bw=None) -> BandedLU:
    """Factor a square band matrix.

    Bandwidths default to the stored pattern's. Raises
    :class:`SingularMatrixError` on a zero pivot.
    """
    if A.nrows != A.ncols:
        raise DimensionError("banded LU needs a square matrix")
    kl0, ku0 = A.bandwidths()
    kl = kl0 if lower_bw is None else int(lower_bw)
    ku = ku0 if upper_bw is None else int(upper_bw)
    rows, cols, vals = A.triplets()
    off = cols - rows
    if np.any((off < -kl) & (vals != 0)) or np.any((off > ku) & (vals != 0)):
        raise DimensionError("matrix has nonzeros outside the declared band")
    keep = (off >= -kl) & (off <= ku)
    n = A.nrows
    ab = np.zeros((2 * kl + ku + 1, n))
    ab[kl + ku + rows[keep] - cols[keep], cols[keep]] = vals[keep]
    lu, piv, info = kernels.banded_lu_factor(ab, kl, ku)
    if info:
        raise SingularMatrixError(f"zero pivot in column {info - 1}")
    return BandedLU(lu, piv, kl, ku)


def banded_lu_solve(F: BandedLU, b) -> np.ndarray:
    return F.solve(b)


class _ShiftedSolver:
    # solves (a I + M) X = R for a block R, band LU when narrow enough
    def __init__(self, M: SparseMatrix, a: float):
        kl, ku = M.bandwidths()
        self.M, self.a = M, a
        if kl + ku <= MAX_BAND:
            self.lu = banded_lu_factor(M + identity(M.nrows).scale(a))
        else:
            self.lu = None
            self.op = LinearOperator.from_matrix(M, a)

    def __call__(self, R):
        if self.lu is not None:
            return self.lu.solve(R)
        out = np.empty_like(R)
        for j in range(R.shape[1]):
            out[:, j], _ = cgne(self.op, R[:, j], None, 1e-12, 10 * R.shape[0] + 100)
        return out


@dataclass
class SylvesterReport:
    iterations: int
    residual_history: list
    wall_time: float
    termination: str
    final_X: np.ndarray
    alpha: float = float("nan")
    omega: float = float("nan")
    extra: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.termination == "converged"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["final_X"] = np.asarray(self.final_X).tolist()
        d["residual_history"] = [float(v) for v in self.residual_history]
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _xb(X, B: SparseMatrix):
    # X @ B computed as (B^T X^T)^T
    return B.transpose().matmat(np.ascontiguousarray(X.T)).T


def sylvester_residual(A: SparseMatrix, B: SparseMatrix, C, X) -> float:
    """Frobenius norm of ``C - A X - X B``."""
    C = np.asarray(C, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.shape != C.shape or A.shape != (C.shape[0],) * 2 or B.shape != (C.shape[1],) * 2:
        raise DimensionError("inconsistent Sylvester shapes")
    return float(np.linalg.norm(C - A.matmat(X) - _xb(X, B)))


def gadi_ab_solve(A: SparseMatrix, B: SparseMatrix, C, alpha: float, omega: float,
                  rel_tol: float = 1e-6, max_iter: int = 5000) -> SylvesterReport:
    """GADI-AB from ``X = 0``; stops on ``||C - AX - XB||_F / ||C||_F <= rel_tol``."""
    validate_alpha_omega(alpha, omega)
    C = np.asarray(C, dtype=np.float64)
    m, n = C.shape
    if A.shape != (m, m) or B.shape != (n, n):
        raise DimensionError("inconsistent Sylvester shapes")
    a, w = float(alpha), float(omega)
    t0 = time.perf_counter()
    solve_a = _ShiftedSolver(A, a)
    solve_bt = _ShiftedSolver(B.transpose(), a)
    X = np.zeros((m, n))
    cnorm = np.linalg.norm(C)
    history = [1.0 if cnorm > 0 else 0.0]
    k = 0
    termination = "max_iter"
    while True:
        if history[-1] <= rel_tol:
            termination = "converged"
            break
        if k >= max_iter:
            break
        XB = _xb(X, B)
        X_half = solve_a(a * X - XB + C)
        rhs = XB - (1.0 - w) * a * X + (2.0 - w) * a * X_half
        X = np.ascontiguousarray(solve_bt(np.ascontiguousarray(rhs.T)).T)
        k += 1
        history.append(sylvester_residual(A, B, C, X) / cnorm)
    return SylvesterReport(k, history, time.perf_counter() - t0, termination, X, a, w)
