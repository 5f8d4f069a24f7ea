import numpy as np
from hypothesis import strategies as st

from gadi.sparse import SparseMatrix


@st.composite
def sparse_matrices(draw, max_dim=12, square=False, min_dim=1):
    m = draw(st.integers(min_dim, max_dim))
    n = m if square else draw(st.integers(min_dim, max_dim))
    seed = draw(st.integers(0, 2**31 - 1))
    density = draw(st.floats(0.0, 1.0))
    rng = np.random.default_rng(seed)
    mask = rng.random((m, n)) < density
    vals = rng.standard_normal((m, n)) * mask
    r, c = np.nonzero(mask)
    return SparseMatrix.from_triplets((m, n), r, c, vals[r, c])
