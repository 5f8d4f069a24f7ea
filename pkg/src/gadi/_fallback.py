"""NumPy implementations of the hot kernels.

Used when the compiled ``gadi._kernels`` extension is unavailable. Every
function here has the same signature and return convention as its compiled
counterpart so :mod:`gadi._backend` can swap them freely.
"""

import numpy as np

CONVERGED = 0
MAXITER = 1
BREAKDOWN = 2


def _row_ids(indptr):
    return np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))


def csr_matvec(indptr, indices, data, x):
    nrows = len(indptr) - 1
    return np.bincount(_row_ids(indptr), weights=data * x[indices], minlength=nrows).astype(float, copy=False)


class _Shifted:
    # y = shift*x + A x with the row expansion cached across calls
    def __init__(self, indptr, indices, data, shift):
        self.rows = _row_ids(indptr)
        self.indices = indices
        self.data = data
        self.shift = shift
        self.n = len(indptr) - 1

    def __call__(self, x):
        # bincount yields int64 when there are no weights
        y = np.bincount(self.rows, weights=self.data * x[self.indices], minlength=self.n).astype(float, copy=False)
        if self.shift != 0.0:
            y += self.shift * x
        return y


def cg_shifted(indptr, indices, data, shift, b, x0, rtol, maxiter):
    """CG on (shift*I + A) x = b.

    Returns ``(x, iterations, relative_residual, status)`` where the residual
    is the true residual relative to ``||b - (shift*I + A) x0||``.
    """
    return cg_loop(_Shifted(indptr, indices, data, shift), b, x0, rtol, maxiter)


def cg_loop(op, b, x0, rtol, maxiter):
    """CG driven by an arbitrary callable ``op``; shared by the generic path."""
    x = np.array(x0, dtype=float, copy=True)
    r = b - op(x)
    r0 = np.sqrt(r @ r)
    if r0 == 0.0:
        return x, 0, 0.0, CONVERGED
    target = rtol * r0
    p = r.copy()
    rr = r @ r
    it = 0
    while True:
        if np.sqrt(rr) <= target:
            r = b - op(x)
            rr = r @ r
            if np.sqrt(rr) <= target:
                return x, it, np.sqrt(rr) / r0, CONVERGED
            p = r.copy()
        if it >= maxiter:
            return x, it, np.sqrt(rr) / r0, MAXITER
        q = op(p)
        pq = p @ q
        if pq <= 0.0:
            return x, it, np.sqrt(rr) / r0, BREAKDOWN
        a = rr / pq
        x += a * p
        r -= a * q
        rr_new = r @ r
        p *= rr_new / rr
        p += r
        rr = rr_new
        it += 1


def cgne_shifted(indptr, indices, data, t_indptr, t_indices, t_data, shift, b, x0, rtol, maxiter):
    """CG on the normal equations of (shift*I + A) x = b.

    ``t_*`` is the CSR form of the transpose of ``A``. Stopping is measured on
    the residual of the original system, not on the normal equations.
    """
    op = _Shifted(indptr, indices, data, shift)
    opt = _Shifted(t_indptr, t_indices, t_data, shift)
    return cgne_loop(op, opt, b, x0, rtol, maxiter)


def cgne_loop(op, opt, b, x0, rtol, maxiter):
    """CGNE driven by callables for the operator and its transpose."""
    x = np.array(x0, dtype=float, copy=True)
    r = b - op(x)
    r0 = np.sqrt(r @ r)
    if r0 == 0.0:
        return x, 0, 0.0, CONVERGED
    target = rtol * r0
    s = opt(r)
    p = s.copy()
    gamma = s @ s
    it = 0
    while True:
        rn = np.sqrt(r @ r)
        if rn <= target:
            r = b - op(x)
            rn = np.sqrt(r @ r)
            if rn <= target:
                return x, it, rn / r0, CONVERGED
            s = opt(r)
            p = s.copy()
            gamma = s @ s
        if it >= maxiter:
            return x, it, rn / r0, MAXITER
        q = op(p)
        qq = q @ q
        if qq <= 0.0 or gamma <= 0.0:
            return x, it, rn / r0, BREAKDOWN
        a = gamma / qq
        x += a * p
        r -= a * q
        s = opt(r)
        gamma_new = s @ s
        p *= gamma_new / gamma
        p += s
        gamma = gamma_new
        it += 1


def banded_lu_factor(ab, kl, ku):
    """Partial-pivoted LU of a band matrix in LAPACK ``gbtrf`` storage.

    ``ab`` has shape ``(2*kl + ku + 1, n)`` with ``A[i, j]`` stored at
    ``ab[kl + ku + i - j, j]``; the top ``kl`` rows are fill workspace. Returns
    ``(lu, piv, info)``; ``info > 0`` is the 1-based index of a zero pivot.
    """
    lu = np.array(ab, dtype=float, copy=True)
    n = lu.shape[1]
    kv = kl + ku
    piv = np.arange(n, dtype=np.int64)
    ju = 0
    for j in range(n):
        km = min(kl, n - 1 - j)
        col = lu[kv:kv + km + 1, j]
        jp = int(np.argmax(np.abs(col)))
        piv[j] = j + jp
        if lu[kv + jp, j] == 0.0:
            return lu, piv, j + 1
        ju = max(ju, min(j + ku + jp, n - 1))
        if jp != 0:
            for c in range(j, ju + 1):
                i1 = kv + j - c
                i2 = kv + j + jp - c
                lu[i1, c], lu[i2, c] = lu[i2, c], lu[i1, c]
        if km > 0:
            lu[kv + 1:kv + km + 1, j] /= lu[kv, j]
            for c in range(j + 1, ju + 1):
                u = lu[kv + j - c, c]
                if u != 0.0:
                    lu[kv + j + 1 - c:kv + j + km + 1 - c, c] -= u * lu[kv + 1:kv + km + 1, j]
    return lu, piv, 0


def banded_lu_solve(lu, piv, kl, ku, b):
    """Solve with factors from :func:`banded_lu_factor`; ``b`` is ``(n, k)``."""
    x = np.array(b, dtype=float, copy=True)
    n = lu.shape[1]
    kv = kl + ku
    for j in range(n):
        km = min(kl, n - 1 - j)
        p = piv[j]
        if p != j:
            x[[j, p]] = x[[p, j]]
        if km > 0:
            x[j + 1:j + km + 1] -= np.outer(lu[kv + 1:kv + km + 1, j], x[j])
    for j in range(n - 1, -1, -1):
        x[j] /= lu[kv, j]
        lo = max(0, j - kv)
        if lo < j:
            x[lo:j] -= np.outer(lu[kv - (j - lo):kv, j], x[j])
    return x
