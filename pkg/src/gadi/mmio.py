"""Matrix Market I/O.

Sparse matrices use the ``coordinate real general`` layout with 1-based
indices; dense matrices and vectors use ``array real general`` (column-major).
Values are written with shortest round-trip precision, so write-then-read is
bit-identical in both pattern and value, explicit zeros included.
"""

from __future__ import annotations

import numpy as np
import scipy.io
import scipy.sparse

from .sparse import SparseMatrix


def write_sparse(path, A: SparseMatrix, comment: str = "") -> None:
    r, c, v = A.triplets()
    coo = scipy.sparse.coo_matrix((v, (r, c)), shape=A.shape)
    scipy.io.mmwrite(str(path), coo, comment=comment, field="real", symmetry="general")


def read_sparse(path) -> SparseMatrix:
    m = scipy.io.mmread(str(path))
    if not scipy.sparse.issparse(m):
        return SparseMatrix.from_dense(m, keep_zeros=True)
    m = m.tocoo()
    return SparseMatrix.from_triplets(m.shape, m.row, m.col, m.data)


def write_dense(path, X, comment: str = "") -> None:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    scipy.io.mmwrite(str(path), X, comment=comment, field="real", symmetry="general")


def read_dense(path) -> np.ndarray:
    m = scipy.io.mmread(str(path))
    if scipy.sparse.issparse(m):
        m = m.toarray()
    return np.asarray(m, dtype=np.float64)
