import numpy as np
import pytest

from gadi.exceptions import DimensionError, SingularMatrixError
from gadi.harness import sylvester_family
from gadi.sparse import SparseMatrix, identity, tridiag
from gadi.sylvester import (banded_lu_factor, banded_lu_solve, gadi_ab_solve,
                            sylvester_residual)
from oracles import gauss_solve


def test_banded_tridiagonal_manufactured():
    A = tridiag(5, -1, 2, -1)
    x = banded_lu_solve(banded_lu_factor(A, 1, 1), A.matvec(np.ones(5)))
    assert np.abs(x - 1).max() <= 1e-12


def test_banded_diagonal_is_division():
    d = np.array([2.0, -4.0, 0.5])
    F = banded_lu_factor(SparseMatrix.from_dense(np.diag(d)), 0, 0)
    b = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(F.solve(b), b / d)


@pytest.mark.parametrize("seed", range(5))
def test_banded_random_tridiagonal_vs_gauss(seed):
    rng = np.random.default_rng(seed)
    n = 50
    d = np.diag(rng.standard_normal(n)) + np.diag(rng.standard_normal(n - 1), 1) \
        + np.diag(rng.standard_normal(n - 1), -1)
    b = rng.standard_normal(n)
    x = banded_lu_factor(SparseMatrix.from_dense(d)).solve(b)
    ref = gauss_solve(d, b)
    assert np.abs(x - ref).max() <= 1e-10 * max(1.0, np.abs(ref).max())


def test_banded_pivoting_needed():
    # zero leading pivot: only works with row exchanges
    d = np.array([[0.0, 1.0, 0.0], [2.0, 1.0, 3.0], [0.0, 4.0, 1.0]])
    b = np.array([1.0, 2.0, 3.0])
    assert np.allclose(banded_lu_factor(SparseMatrix.from_dense(d)).solve(b), gauss_solve(d, b))


def test_banded_wider_band_multi_rhs(rng):
    n, kl, ku = 30, 3, 2
    d = sum(np.diag(rng.standard_normal(n - abs(k)), k) for k in range(-kl, ku + 1))
    B = rng.standard_normal((n, 4))
    X = banded_lu_factor(SparseMatrix.from_dense(d), kl, ku).solve(B)
    assert np.allclose(d @ X, B, atol=1e-10)


def test_banded_singular():
    with pytest.raises(SingularMatrixError):
        banded_lu_factor(SparseMatrix.from_dense([[1.0, 2.0], [2.0, 4.0]]))


def test_banded_rejects_out_of_band():
    with pytest.raises(DimensionError):
        banded_lu_factor(SparseMatrix.from_dense(np.ones((3, 3))), 1, 1)


def test_residual_examples(rng):
    p = sylvester_family(8, 0.1)
    assert sylvester_residual(p.A, p.B, p.C, p.x_exact) <= 1e-10 * np.linalg.norm(p.C)
    assert sylvester_residual(p.A, p.B, p.C, np.zeros((8, 8))) == pytest.approx(np.linalg.norm(p.C))
    X = p.x_exact + 1e-3 * rng.standard_normal((8, 8))
    a, b = p.A.to_dense(), p.B.to_dense()
    ref = np.linalg.norm(p.C - a @ X - X @ b)
    assert abs(sylvester_residual(p.A, p.B, p.C, X) - ref) <= 1e-12 * max(ref, 1)


def test_half_steps_against_dense(rng):
    a = rng.standard_normal((3, 3)) + 4 * np.eye(3)
    b = rng.standard_normal((3, 3)) + 4 * np.eye(3)
    C = rng.standard_normal((3, 3))
    A, B = SparseMatrix.from_dense(a, keep_zeros=True), SparseMatrix.from_dense(b, keep_zeros=True)
    al, om = 0.7, 0.4
    rep = gadi_ab_solve(A, B, C, al, om, rel_tol=1e-300, max_iter=2)
    X = np.zeros((3, 3))
    I = np.eye(3)
    for _ in range(2):
        half = np.linalg.solve(al * I + a, X @ (al * I - b) + C)
        X = np.linalg.solve((al * I + b).T, (X @ (b - (1 - om) * al * I) + (2 - om) * al * half).T).T
    assert np.abs(rep.final_X - X).max() <= 1e-12


def test_identity_coefficients_fixed_point():
    n = 4
    I = identity(n)
    Xe = np.arange(16.0).reshape(4, 4)
    rep = gadi_ab_solve(I, I, 2 * Xe, 1.0, 0.0)
    assert rep.converged and np.allclose(rep.final_X, Xe)
    # each step multiplies the error by a fixed factor, so residual ratios are constant
    rep = gadi_ab_solve(I, I, 2 * Xe, 0.5, 0.5)
    h = np.array(rep.residual_history)
    ratios = h[1:] / h[:-1]
    assert np.allclose(ratios, ratios[0])


@pytest.mark.parametrize("alpha,omega", [(0.3, 0.0), (1.0, 1.0), (2.5, 1.7)])
def test_converged_solution_satisfies_equation(alpha, omega):
    p = sylvester_family(12, 0.5)
    rep = gadi_ab_solve(p.A, p.B, p.C, alpha, omega)
    assert rep.converged
    assert sylvester_residual(p.A, p.B, p.C, rep.final_X) <= 2e-6 * np.linalg.norm(p.C)


@pytest.mark.parametrize("alpha", [0.05, 0.5, 3.0])
@pytest.mark.parametrize("omega", [0.0, 0.9, 1.8])
def test_iteration_contracts(alpha, omega):
    p = sylvester_family(10, 0.3, rhs="manufactured")
    rep = gadi_ab_solve(p.A, p.B, p.C, alpha, omega, rel_tol=1e-8, max_iter=20000)
    assert rep.converged


def test_dimension_checks():
    with pytest.raises(DimensionError):
        gadi_ab_solve(identity(3), identity(2), np.ones((3, 3)), 1.0, 0.0)


@pytest.mark.parametrize("n,r,alpha,omega,it", [
    (16, 0.01, 1.18, 0.0, 12), (32, 1.0, 1.28, 0.1, 12), (16, 1.0, 1.87, 0.0, 8)])
def test_reference_rows(n, r, alpha, omega, it):
    p = sylvester_family(n, r)
    assert abs(gadi_ab_solve(p.A, p.B, p.C, alpha, omega).iterations - it) <= 2
