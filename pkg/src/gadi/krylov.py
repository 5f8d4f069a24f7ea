"""Inner Krylov solvers (CG, CGNE) and power-iteration spectral estimators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _fallback
from ._backend import BREAKDOWN, CONVERGED, kernels
from .exceptions import BreakdownError, DimensionError
from .sparse import SparseMatrix


class LinearOperator:
    """A square linear map given by callables.

    Operators built with :meth:`from_matrix` also carry the CSR matrix and a
    diagonal shift, which lets :func:`cg` and :func:`cgne` run the fused
    compiled kernels instead of calling back into Python every iteration.
    """

    def __init__(self, n: int, apply: Callable, apply_t: Optional[Callable] = None):
        self.n = int(n)
        self.apply = apply
        self.apply_t = apply_t
        self.matrix: Optional[SparseMatrix] = None
        self.shift = 0.0

    @classmethod
    def from_matrix(cls, A: SparseMatrix, shift: float = 0.0) -> "LinearOperator":
        """The operator ``shift*I + A``."""
        if A.nrows != A.ncols:
            raise DimensionError("operator must be square")
        shift = float(shift)
        At = A.transpose()
        op = cls(A.nrows,
                 lambda x: A.matvec(x) + shift * x,
                 lambda x: At.matvec(x) + shift * x)
        op.matrix = A
        op.shift = shift
        return op

    @classmethod
    def from_dense(cls, a) -> "LinearOperator":
        a = np.asarray(a, dtype=np.float64)
        return cls(a.shape[0], lambda x: a @ x, lambda x: a.T @ x)

    def __call__(self, x):
        return self.apply(x)


@dataclass(frozen=True)
class InnerSolveStats:
    iterations: int
    rel_residual: float
    converged: bool


def _prepare(op, b, x0):
    if op.n == 0:
        raise DimensionError("zero-dimensional system")
    b = np.ascontiguousarray(b, dtype=np.float64)
    if b.shape != (op.n,):
        raise DimensionError(f"rhs of shape {b.shape} for operator of size {op.n}")
    x0 = np.zeros(op.n) if x0 is None else np.ascontiguousarray(x0, dtype=np.float64)
    return b, x0


def _finish(x, it, rel, status, what):
    if status == BREAKDOWN:
        raise BreakdownError(f"{what} breakdown after {it} iterations")
    return x, InnerSolveStats(int(it), float(rel), status == CONVERGED)


def cg(op: LinearOperator, b, x0=None, rel_tol: float = 1e-8, max_iter: int = 1000):
    """Conjugate gradients for a symmetric positive definite operator.

    Stops when ``||b - op(x)|| <= rel_tol * ||b - op(x0)||``, confirmed on the
    recomputed true residual.

    Raises
    ------
    BreakdownError
        If ``p^T op(p) <= 0``, i.e. the operator is not positive definite.
    """
    b, x0 = _prepare(op, b, x0)
    if op.matrix is not None:
        A = op.matrix
        res = kernels.cg_shifted(A.indptr, A.indices, A.data, op.shift, b, x0,
                                 float(rel_tol), int(max_iter))
    else:
        res = _fallback.cg_loop(op.apply, b, x0, rel_tol, max_iter)
    return _finish(*res, "CG")


def cgne(op: LinearOperator, b, x0=None, rel_tol: float = 1e-8, max_iter: int = 1000):
    """CG on the normal equations ``op^T op x = op^T b``.

    The stopping test uses the residual of the original system,
    ``||b - op(x)|| <= rel_tol * ||b - op(x0)||``.
    """
    b, x0 = _prepare(op, b, x0)
    if op.matrix is not None:
        A = op.matrix
        At = A.transpose()
        res = kernels.cgne_shifted(A.indptr, A.indices, A.data, At.indptr, At.indices,
                                   At.data, op.shift, b, x0, float(rel_tol), int(max_iter))
    else:
        if op.apply_t is None:
            raise DimensionError("cgne needs an operator with a transpose")
        res = _fallback.cgne_loop(op.apply, op.apply_t, b, x0, rel_tol, max_iter)
    return _finish(*res, "CGNE")


@dataclass(frozen=True)
class SpectralEstimate:
    value: float
    iterations: int
    converged: bool

    def __float__(self):
        return self.value


def spectral_radius_power(op, tol: float = 1e-8, max_iter: int = 10000, seed: int = 0,
                          x0=None) -> SpectralEstimate:
    """Estimate the dominant eigenvalue magnitude of ``op``.

    Power iteration on a single vector ``x`` with Rayleigh-Ritz extraction on
    ``span{x, op x}``. That pair converges to an invariant subspace whenever
    the dominant eigenvalue is real or a complex-conjugate pair, including
    repeated pairs, which a block of independent vectors does not. The start
    vector is seeded unless ``x0`` is given. Each step applies ``op`` twice.

    Convergence is declared when the relative change of the estimate stays
    within ``tol`` for one step (real dominant Ritz value) or for 20
    consecutive steps (complex dominant pair).
    """
    if not isinstance(op, LinearOperator):
        op = LinearOperator.from_dense(op)
    n = op.n
    if n == 0:
        raise DimensionError("zero-dimensional operator")
    if x0 is None:
        x = np.random.default_rng(seed).standard_normal(n)
    else:
        x = np.array(x0, dtype=np.float64)
    nx = np.linalg.norm(x)
    if nx == 0.0:
        raise DimensionError("start vector is zero")
    x /= nx
    prev = None
    streak = 0
    est = 0.0
    for it in range(1, max_iter + 1):
        y = op.apply(x)
        if not np.any(y):
            return SpectralEstimate(0.0, it, True)
        w = op.apply(y)
        Q, R = np.linalg.qr(np.column_stack([x, y]))
        if abs(R[1, 1]) <= 1e-14 * abs(R[0, 0]) + 1e-300:
            # x is an eigenvector already
            ritz = np.array([x @ y])
        else:
            ritz = np.linalg.eigvals(Q.T @ np.linalg.solve(R.T, np.column_stack([y, w]).T).T)
        lead = ritz[np.argmax(np.abs(ritz))]
        est = float(np.abs(lead))
        complex_pair = abs(lead.imag) > 1e-12 * max(est, 1e-300)
        if prev is not None:
            change = abs(est - prev) / max(est, 1e-300)
            streak = streak + 1 if change <= tol else 0
            if streak >= (20 if complex_pair else 1):
                return SpectralEstimate(est, it, True)
        prev = est
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return SpectralEstimate(est, it, True)
        x = w / nw
    return SpectralEstimate(est, max_iter, False)


def _sym_radius(apply, n, tol, max_iter, seed):
    return spectral_radius_power(LinearOperator(n, apply, apply), tol, max_iter, seed)


def lambda_extremes_spd(H: SparseMatrix, tol: float = 1e-8, max_iter: int = 10000,
                        seed: int = 0):
    """Extreme eigenvalues of a symmetric positive definite matrix.

    ``lambda_max`` comes from power iteration on ``H`` and ``lambda_min`` from
    power iteration on ``lambda_max*I - H``.
    """
    lmax = _sym_radius(H.matvec, H.nrows, tol, max_iter, seed).value
    shifted = _sym_radius(lambda x: lmax * x - H.matvec(x), H.nrows, tol, max_iter, seed + 1)
    return lmax - shifted.value, lmax


def sigma_max(S: SparseMatrix, tol: float = 1e-8, max_iter: int = 10000, seed: int = 0) -> float:
    """Largest singular value via power iteration on ``S^T S``."""
    if S.nnz == 0 or not np.any(S.data):
        return 0.0
    St = S.transpose()
    est = _sym_radius(lambda x: St.matvec(S.matvec(x)), S.ncols, tol, max_iter, seed)
    return float(np.sqrt(est.value))


def matrix_two_norm(A: SparseMatrix, tol: float = 1e-8, max_iter: int = 10000,
                    seed: int = 0) -> float:
    return sigma_max(A, tol, max_iter, seed)
