"""Compressed-row sparse matrices and the Hermitian/skew-Hermitian split.

Dense vectors and matrices are plain ``numpy`` float64 arrays; only the sparse
type needs a dedicated class.
"""

from __future__ import annotations

import numpy as np

from ._backend import kernels
from .exceptions import CapacityError, DimensionError

_INDEX_LIMIT = np.iinfo(np.int64).max // 4


class SparseMatrix:
    """Real CSR matrix with sorted, duplicate-free column indices per row.

    Instances are treated as immutable: the arrays are marked read-only and
    every operation returns a new matrix.

    Parameters
    ----------
    shape : tuple of int
        ``(nrows, ncols)``.
    indptr, indices, data : array_like
        Standard CSR arrays. They are validated, not repaired; use
        :meth:`from_triplets` to assemble from unsorted or duplicated entries.
    """

    __slots__ = ("nrows", "ncols", "indptr", "indices", "data", "_t")

    def __init__(self, shape, indptr, indices, data, *, check=True):
        self.nrows, self.ncols = int(shape[0]), int(shape[1])
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        for arr in (self.indptr, self.indices, self.data):
            arr.flags.writeable = False
        self._t = None
        if check:
            self.check()

    def check(self):
        """Raise :class:`DimensionError` if a CSR invariant is violated."""
        if self.nrows < 0 or self.ncols < 0:
            raise DimensionError("negative dimension")
        ip = self.indptr
        if ip.shape != (self.nrows + 1,) or ip[0] != 0:
            raise DimensionError("row offsets must have length nrows+1 and start at 0")
        if np.any(np.diff(ip) < 0):
            raise DimensionError("row offsets must be nondecreasing")
        nnz = int(ip[-1])
        if self.indices.shape != (nnz,) or self.data.shape != (nnz,):
            raise DimensionError("indices/data length must equal the last row offset")
        if nnz:
            if self.indices.min() < 0 or self.indices.max() >= self.ncols:
                raise DimensionError("column index out of range")
            step = np.diff(self.indices)
            row_start = np.zeros(nnz, dtype=bool)
            row_start[ip[:-1][np.diff(ip) > 0]] = True
            if np.any((step <= 0) & ~row_start[1:]):
                raise DimensionError("column indices must be strictly increasing in each row")

    # construction -------------------------------------------------------

    @classmethod
    def from_triplets(cls, shape, rows, cols, vals) -> "SparseMatrix":
        """Assemble from COO triplets, summing duplicates.

        Explicit zeros (including duplicates that cancel) stay in the pattern.
        """
        nrows, ncols = int(shape[0]), int(shape[1])
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=np.float64).ravel()
        if not (len(rows) == len(cols) == len(vals)):
            raise DimensionError("triplet arrays must have equal length")
        if len(rows) and (rows.min() < 0 or rows.max() >= nrows
                          or cols.min() < 0 or cols.max() >= ncols):
            raise DimensionError("triplet index out of range")
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if len(rows):
            new = np.ones(len(rows), dtype=bool)
            new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.flatnonzero(new)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        indptr = np.zeros(nrows + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=nrows), out=indptr[1:])
        return cls((nrows, ncols), indptr, cols, vals, check=False)

    @classmethod
    def from_dense(cls, a, *, keep_zeros=False) -> "SparseMatrix":
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        if keep_zeros:
            r, c = np.indices(a.shape)
            return cls.from_triplets(a.shape, r, c, a)
        r, c = np.nonzero(a)
        return cls.from_triplets(a.shape, r, c, a[r, c])

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self.row_ids(), self.indices] = self.data
        return out

    def to_scipy(self):
        """Return an equivalent ``scipy.sparse.csr_matrix`` (for interop)."""
        from scipy.sparse import csr_matrix

        return csr_matrix((self.data, self.indices, self.indptr), shape=self.shape)

    # basic properties ---------------------------------------------------

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    def row_ids(self) -> np.ndarray:
        return np.repeat(np.arange(self.nrows, dtype=np.int64), np.diff(self.indptr))

    def triplets(self):
        return self.row_ids(), self.indices.copy(), self.data.copy()

    def diagonal(self) -> np.ndarray:
        rows = self.row_ids()
        on = rows == self.indices
        d = np.zeros(min(self.shape))
        d[rows[on]] = self.data[on]
        return d

    def bandwidths(self):
        """Return ``(lower, upper)`` bandwidths of the stored pattern."""
        if self.nnz == 0:
            return 0, 0
        off = self.indices - self.row_ids()
        return int(max(0, -off.min())), int(max(0, off.max()))

    def __repr__(self):
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz})"

    # algebra --------------------------------------------------------------

    @property
    def T(self) -> "SparseMatrix":
        return self.transpose()

    def transpose(self) -> "SparseMatrix":
        if self._t is None:
            r, c, v = self.triplets()
            self._t = SparseMatrix.from_triplets((self.ncols, self.nrows), c, r, v)
        return self._t

    def _combine(self, other, sign):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        if self.shape != other.shape:
            raise DimensionError(f"shape mismatch {self.shape} vs {other.shape}")
        r1, c1, v1 = self.triplets()
        r2, c2, v2 = other.triplets()
        return SparseMatrix.from_triplets(
            self.shape,
            np.concatenate([r1, r2]),
            np.concatenate([c1, c2]),
            np.concatenate([v1, sign * v2]),
        )

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def scale(self, s: float) -> "SparseMatrix":
        return SparseMatrix(self.shape, self.indptr, self.indices, s * self.data, check=False)

    def __mul__(self, s):
        if np.isscalar(s):
            return self.scale(float(s))
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self.scale(-1.0)

    def matvec(self, x) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.shape != (self.ncols,):
            raise DimensionError(f"vector of length {x.shape} for matrix {self.shape}")
        return kernels.csr_matvec(self.indptr, self.indices, self.data, x)

    def matmat(self, X) -> np.ndarray:
        """Sparse times dense matrix, column by column."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] != self.ncols:
            raise DimensionError(f"matrix of shape {X.shape} for matrix {self.shape}")
        out = np.empty((self.nrows, X.shape[1]))
        for j in range(X.shape[1]):
            out[:, j] = self.matvec(np.ascontiguousarray(X[:, j]))
        return out

    def __matmul__(self, other):
        other = np.asarray(other)
        return self.matvec(other) if other.ndim == 1 else self.matmat(other)

    def allclose(self, other, atol=0.0) -> bool:
        """Same pattern and values within ``atol``."""
        return (
            self.shape == other.shape
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.allclose(self.data, other.data, rtol=0.0, atol=atol)
        )


def identity(n: int) -> SparseMatrix:
    if n < 1:
        raise DimensionError("n must be at least 1")
    idx = np.arange(n, dtype=np.int64)
    return SparseMatrix((n, n), np.arange(n + 1), idx, np.ones(n), check=False)


def tridiag(n: int, lower: float, diag: float, upper: float) -> SparseMatrix:
    """Constant-diagonal tridiagonal matrix ``Tridiag(lower, diag, upper)``.

    All three bands are stored even when a coefficient is zero.

    Examples
    --------
    >>> tridiag(3, -1, 2, -1).to_dense()
    array([[ 2., -1.,  0.],
           [-1.,  2., -1.],
           [ 0., -1.,  2.]])
    """
    if n < 1:
        raise DimensionError("n must be at least 1")
    i = np.arange(n)
    rows = np.concatenate([i[1:], i, i[:-1]])
    cols = np.concatenate([i[:-1], i, i[1:]])
    vals = np.concatenate([np.full(n - 1, lower), np.full(n, diag), np.full(n - 1, upper)])
    return SparseMatrix.from_triplets((n, n), rows, cols, vals)


def kron(A: SparseMatrix, B: SparseMatrix) -> SparseMatrix:
    """Kronecker product with the left factor outer: row ``iA*mB + iB``."""
    if min(A.shape) < 1 or min(B.shape) < 1:
        raise DimensionError("kron operands must be nonempty")
    mA, nA = A.shape
    mB, nB = B.shape
    if mA * mB > _INDEX_LIMIT or nA * nB > _INDEX_LIMIT or A.nnz * B.nnz > _INDEX_LIMIT:
        raise CapacityError("Kronecker product exceeds the index range")
    ra, ca, va = A.triplets()
    rb, cb, vb = B.triplets()
    rows = (ra[:, None] * mB + rb[None, :]).ravel()
    cols = (ca[:, None] * nB + cb[None, :]).ravel()
    vals = (va[:, None] * vb[None, :]).ravel()
    return SparseMatrix.from_triplets((mA * mB, nA * nB), rows, cols, vals)


def hs_split(A: SparseMatrix):
    """Return ``(H, S)`` with ``H = (A + A^T)/2`` and ``S = (A - A^T)/2``.

    Both share the symmetrized pattern of ``A``; entries that cancel are kept
    as explicit zeros.
    """
    if A.nrows != A.ncols:
        raise DimensionError("hs_split needs a square matrix")
    At = A.transpose()
    return (A + At).scale(0.5), (A - At).scale(0.5)


def spmv(A: SparseMatrix, x) -> np.ndarray:
    return A.matvec(x)


def transpose(A: SparseMatrix) -> SparseMatrix:
    return A.transpose()
