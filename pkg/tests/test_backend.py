import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.linalg
import scipy.sparse
from hypothesis import given, settings, strategies as st

from gadi import _backend
from gadi.sparse import SparseMatrix

py = _backend.get_kernels("python")
try:
    cy = _backend.get_kernels("cython")
except ImportError:  # extension not built
    cy = None

needs_cython = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def _csr(A):
    M = SparseMatrix.from_dense(A)
    return M.indptr, M.indices, M.data


def _random(n, m, seed, density=0.3):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, m)) * (rng.random((n, m)) < density)
    return A, rng


@needs_cython
@given(st.integers(1, 30), st.integers(1, 30), st.integers(0, 10**6))
def test_matvec_parity(n, m, seed):
    A, rng = _random(n, m, seed)
    x = rng.standard_normal(m)
    a = cy.csr_matvec(*_csr(A), x)
    b = py.csr_matvec(*_csr(A), x)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-13) and np.allclose(a, A @ x, atol=1e-12)


@needs_cython
@settings(max_examples=25)
@given(st.integers(2, 40), st.integers(0, 10**6), st.floats(0.1, 5.0))
def test_cg_parity(n, seed, shift):
    B, rng = _random(n, n, seed)
    H = B @ B.T
    b = rng.standard_normal(n)
    x0 = np.zeros(n)
    ra = cy.cg_shifted(*_csr(H), shift, b, x0, 1e-10, 10 * n)
    rb = py.cg_shifted(*_csr(H), shift, b, x0, 1e-10, 10 * n)
    assert ra[3] == rb[3] == _backend.CONVERGED
    assert abs(ra[1] - rb[1]) <= 2
    ref = np.linalg.solve(H + shift * np.eye(n), b)
    for x in (ra[0], rb[0]):
        assert np.linalg.norm(x - ref) <= 1e-7 * np.linalg.norm(ref) * np.linalg.cond(H + shift * np.eye(n))


@needs_cython
@settings(max_examples=25)
@given(st.integers(2, 40), st.integers(0, 10**6), st.floats(0.1, 5.0))
def test_cgne_parity(n, seed, shift):
    B, rng = _random(n, n, seed)
    S = (B - B.T) / 2
    b = rng.standard_normal(n)
    x0 = np.zeros(n)
    St = S.T.copy()
    ra = cy.cgne_shifted(*_csr(S), *_csr(St), shift, b, x0, 1e-10, 20 * n)
    rb = py.cgne_shifted(*_csr(S), *_csr(St), shift, b, x0, 1e-10, 20 * n)
    assert ra[3] == rb[3] == _backend.CONVERGED
    assert abs(ra[1] - rb[1]) <= 2
    ref = np.linalg.solve(S + shift * np.eye(n), b)
    assert np.allclose(ra[0], ref, atol=1e-7) and np.allclose(rb[0], ref, atol=1e-7)


def _band_storage(A, kl, ku):
    n = A.shape[0]
    ab = np.zeros((2 * kl + ku + 1, n))
    for j in range(n):
        for i in range(max(0, j - ku), min(n, j + kl + 1)):
            ab[kl + ku + i - j, j] = A[i, j]
    return ab


@needs_cython
@given(st.integers(2, 25), st.integers(0, 3), st.integers(0, 3), st.integers(0, 10**6))
def test_banded_lu_parity(n, kl, ku, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    A = np.triu(np.tril(A, ku), -kl) + 4 * np.eye(n)
    ab = _band_storage(A, kl, ku)
    b = rng.standard_normal((n, 2))
    la, pa, ia = cy.banded_lu_factor(ab.copy(), kl, ku)
    lb, pb, ib = py.banded_lu_factor(ab.copy(), kl, ku)
    lref, pref, iref = scipy.linalg.lapack.dgbtrf(ab.copy(), kl, ku)
    assert ia == ib == iref == 0
    assert np.array_equal(np.asarray(pa), np.asarray(pb))
    assert np.allclose(la, lb, rtol=1e-13, atol=1e-13)
    xa = cy.banded_lu_solve(la, pa, kl, ku, b)
    xb = py.banded_lu_solve(lb, pb, kl, ku, b)
    assert np.allclose(xa, np.linalg.solve(A, b), rtol=1e-10, atol=1e-10)
    assert np.allclose(xa, xb, rtol=1e-12, atol=1e-12)


def test_banded_lu_singular_info():
    ab = _band_storage(np.diag([1.0, 0.0, 2.0]), 0, 0)
    assert py.banded_lu_factor(ab, 0, 0)[2] == 2
    if cy is not None:
        assert cy.banded_lu_factor(ab, 0, 0)[2] == 2


def test_cg_reports_maxiter():
    n = 50
    H = scipy.sparse.diags(np.linspace(1, 1e4, n)).toarray()
    res = py.cg_shifted(*_csr(H), 0.0, np.ones(n), np.zeros(n), 1e-14, 3)
    assert res[1] == 3 and res[3] == _backend.MAXITER


def test_environment_forces_fallback():
    code = "from gadi import _backend; print(_backend.BACKEND)"
    env = dict(os.environ, GADI_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
    env.pop("GADI_BACKEND")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == ("cython" if cy is not None else "python")


def test_solver_results_match_across_backends():
    code = ("from gadi.harness import conv_diff_3d, run_method;"
            "r = run_method(conv_diff_3d(6), 'practical-gadi-hs', 0.3, 1.0);"
            "print(r.iterations, r.inner_cg_mean, r.inner_cgne_mean)")
    outs = []
    for backend in ("python", "cython"):
        env = dict(os.environ, GADI_BACKEND=backend)
        outs.append(subprocess.run([sys.executable, "-c", code], env=env,
                                   capture_output=True, text=True).stdout.split())
    assert outs[0][0] == outs[1][0]
    assert float(outs[0][1]) == pytest.approx(float(outs[1][1]), abs=0.5)


@pytest.mark.parametrize("mod", [py] + ([cy] if cy is not None else []))
def test_zero_matrix_kernels_return_floats(mod):
    indptr, indices, data = np.zeros(4, np.int64), np.zeros(0, np.int64), np.zeros(0)
    assert mod.csr_matvec(indptr, indices, data, np.ones(3)).dtype == np.float64
    x, it, res, status = mod.cg_shifted(indptr, indices, data, 2.0, np.ones(3), np.zeros(3), 1e-12, 10)
    assert status == _backend.CONVERGED and np.allclose(x, 0.5)
