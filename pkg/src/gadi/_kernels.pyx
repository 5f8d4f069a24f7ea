# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: CSR products, fused shifted CG/CGNE, banded LU.

Signatures and return conventions mirror :mod:`gadi._fallback`.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

DEF CONVERGED = 0
DEF MAXITER = 1
DEF BREAKDOWN = 2


cdef inline void _shifted_mv(const long long[::1] indptr, const long long[::1] indices,
                             const double[::1] data, double shift,
                             const double[::1] x, double[::1] y) noexcept nogil:
    cdef Py_ssize_t i, k, n = indptr.shape[0] - 1
    cdef double acc
    for i in range(n):
        # x may be shorter than n for rectangular A; shift is only used when square
        acc = shift * x[i] if shift != 0.0 else 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        y[i] = acc


cdef inline double _dot(const double[::1] a, const double[::1] b) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(a.shape[0]):
        s += a[i] * b[i]
    return s


def csr_matvec(const long long[::1] indptr, const long long[::1] indices,
               const double[::1] data, const double[::1] x):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    y = np.empty(n)
    cdef double[::1] yv = y
    with nogil:
        _shifted_mv(indptr, indices, data, 0.0, x, yv)
    return y


def cg_shifted(const long long[::1] indptr, const long long[::1] indices,
               const double[::1] data, double shift, const double[::1] b,
               x0, double rtol, long maxiter):
    cdef Py_ssize_t n = b.shape[0], i
    x = np.array(x0, dtype=np.float64, copy=True)
    r = np.empty(n)
    p = np.empty(n)
    q = np.empty(n)
    cdef double[::1] xv = x, rv = r, pv = p, qv = q
    cdef double r0, rr, rr_new, pq, a, beta, target
    cdef long it = 0
    cdef int status = MAXITER
    with nogil:
        _shifted_mv(indptr, indices, data, shift, xv, qv)
        for i in range(n):
            rv[i] = b[i] - qv[i]
        rr = _dot(rv, rv)
        r0 = sqrt(rr)
        if r0 == 0.0:
            status = CONVERGED
        else:
            target = rtol * r0
            for i in range(n):
                pv[i] = rv[i]
            while True:
                if sqrt(rr) <= target:
                    # confirm on the true residual before accepting
                    _shifted_mv(indptr, indices, data, shift, xv, qv)
                    for i in range(n):
                        rv[i] = b[i] - qv[i]
                    rr = _dot(rv, rv)
                    if sqrt(rr) <= target:
                        status = CONVERGED
                        break
                    for i in range(n):
                        pv[i] = rv[i]
                if it >= maxiter:
                    status = MAXITER
                    break
                _shifted_mv(indptr, indices, data, shift, pv, qv)
                pq = _dot(pv, qv)
                if pq <= 0.0:
                    status = BREAKDOWN
                    break
                a = rr / pq
                rr_new = 0.0
                for i in range(n):
                    xv[i] += a * pv[i]
                    rv[i] -= a * qv[i]
                    rr_new += rv[i] * rv[i]
                beta = rr_new / rr
                for i in range(n):
                    pv[i] = rv[i] + beta * pv[i]
                rr = rr_new
                it += 1
    if r0 == 0.0:
        return x, 0, 0.0, status
    return x, it, sqrt(rr) / r0, status


def cgne_shifted(const long long[::1] indptr, const long long[::1] indices,
                 const double[::1] data, const long long[::1] t_indptr,
                 const long long[::1] t_indices, const double[::1] t_data,
                 double shift, const double[::1] b, x0, double rtol, long maxiter):
    cdef Py_ssize_t n = b.shape[0], i
    x = np.array(x0, dtype=np.float64, copy=True)
    r = np.empty(n)
    s = np.empty(n)
    p = np.empty(n)
    q = np.empty(n)
    cdef double[::1] xv = x, rv = r, sv = s, pv = p, qv = q
    cdef double r0, rn, gamma, gamma_new, qq, a, beta, target
    cdef long it = 0
    cdef int status = MAXITER
    with nogil:
        _shifted_mv(indptr, indices, data, shift, xv, qv)
        for i in range(n):
            rv[i] = b[i] - qv[i]
        r0 = sqrt(_dot(rv, rv))
        rn = r0
        if r0 == 0.0:
            status = CONVERGED
        else:
            target = rtol * r0
            _shifted_mv(t_indptr, t_indices, t_data, shift, rv, sv)
            for i in range(n):
                pv[i] = sv[i]
            gamma = _dot(sv, sv)
            while True:
                rn = sqrt(_dot(rv, rv))
                if rn <= target:
                    _shifted_mv(indptr, indices, data, shift, xv, qv)
                    for i in range(n):
                        rv[i] = b[i] - qv[i]
                    rn = sqrt(_dot(rv, rv))
                    if rn <= target:
                        status = CONVERGED
                        break
                    _shifted_mv(t_indptr, t_indices, t_data, shift, rv, sv)
                    for i in range(n):
                        pv[i] = sv[i]
                    gamma = _dot(sv, sv)
                if it >= maxiter:
                    status = MAXITER
                    break
                _shifted_mv(indptr, indices, data, shift, pv, qv)
                qq = _dot(qv, qv)
                if qq <= 0.0 or gamma <= 0.0:
                    status = BREAKDOWN
                    break
                a = gamma / qq
                for i in range(n):
                    xv[i] += a * pv[i]
                    rv[i] -= a * qv[i]
                _shifted_mv(t_indptr, t_indices, t_data, shift, rv, sv)
                gamma_new = _dot(sv, sv)
                beta = gamma_new / gamma
                for i in range(n):
                    pv[i] = sv[i] + beta * pv[i]
                gamma = gamma_new
                it += 1
    if r0 == 0.0:
        return x, 0, 0.0, status
    return x, it, rn / r0, status


def banded_lu_factor(ab, int kl, int ku):
    lu = np.array(ab, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] a = lu
    cdef Py_ssize_t n = a.shape[1], kv = kl + ku
    piv = np.arange(n, dtype=np.int64)
    cdef long long[::1] pv = piv
    cdef Py_ssize_t j, c, i, km, jp, ju = 0
    cdef double best, t, u, d
    cdef int info = 0
    with nogil:
        for j in range(n):
            km = kl if kl < n - 1 - j else n - 1 - j
            jp = 0
            best = fabs(a[kv, j])
            for i in range(1, km + 1):
                if fabs(a[kv + i, j]) > best:
                    best = fabs(a[kv + i, j])
                    jp = i
            pv[j] = j + jp
            if a[kv + jp, j] == 0.0:
                info = j + 1
                break
            if j + ku + jp < n - 1:
                if j + ku + jp > ju:
                    ju = j + ku + jp
            else:
                ju = n - 1
            if jp != 0:
                for c in range(j, ju + 1):
                    t = a[kv + j - c, c]
                    a[kv + j - c, c] = a[kv + j + jp - c, c]
                    a[kv + j + jp - c, c] = t
            if km > 0:
                d = a[kv, j]
                for i in range(1, km + 1):
                    a[kv + i, j] /= d
                for c in range(j + 1, ju + 1):
                    u = a[kv + j - c, c]
                    if u != 0.0:
                        for i in range(1, km + 1):
                            a[kv + j + i - c, c] -= u * a[kv + i, j]
    return lu, piv, info


def banded_lu_solve(lu_in, piv_in, int kl, int ku, b):
    x = np.array(b, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] xv = x
    cdef const double[:, ::1] lu = np.ascontiguousarray(lu_in, dtype=np.float64)
    cdef const long long[::1] piv = np.ascontiguousarray(piv_in, dtype=np.int64)
    cdef Py_ssize_t n = lu.shape[1], k = xv.shape[1], kv = kl + ku
    cdef Py_ssize_t j, i, c, km, p, lo
    cdef double t, l
    with nogil:
        for j in range(n):
            km = kl if kl < n - 1 - j else n - 1 - j
            p = piv[j]
            if p != j:
                for c in range(k):
                    t = xv[j, c]
                    xv[j, c] = xv[p, c]
                    xv[p, c] = t
            for i in range(1, km + 1):
                l = lu[kv + i, j]
                if l != 0.0:
                    for c in range(k):
                        xv[j + i, c] -= l * xv[j, c]
        for j in range(n - 1, -1, -1):
            t = lu[kv, j]
            for c in range(k):
                xv[j, c] /= t
            lo = j - kv if j > kv else 0
            for i in range(lo, j):
                l = lu[kv + i - j, j]
                if l != 0.0:
                    for c in range(k):
                        xv[i, c] -= l * xv[j, c]
    return x
