import numpy as np
import pytest

from gadi.core import GadiConfig, gadi_hs_solve
from gadi.exceptions import ConfigError
from gadi.harness import conv_diff_3d
from gadi.inexact import InexactConfig, ihss_solve, practical_gadi_hs
from gadi.krylov import LinearOperator, cg, cgne
from gadi.sparse import hs_split


@pytest.fixture(scope="module")
def cd10():
    return conv_diff_3d(10)


def test_config_validation():
    with pytest.raises(ConfigError):
        InexactConfig(0.0)
    with pytest.raises(ConfigError):
        InexactConfig(1.0, delta_h=0)
    with pytest.raises(ConfigError):
        InexactConfig(1.0, omega=2.0)


def test_tight_inner_matches_exact_stepwise(cd10):
    p = cd10
    for k in (1, 2, 5, 10):
        exact = gadi_hs_solve(p.A, p.b, GadiConfig(0.5, 1.2, max_outer=k, outer_rel_tol=1e-15))
        tight = practical_gadi_hs(p.A, p.b, InexactConfig(0.5, 1.2, 12, 12, 1e-15, k, 5000))
        assert np.abs(exact.final_x - tight.final_x).max() <= 1e-8


def test_iterations_approach_exact(cd10):
    p = cd10
    exact = gadi_hs_solve(p.A, p.b, GadiConfig(0.5, 1.0)).iterations
    its = [practical_gadi_hs(p.A, p.b, InexactConfig(0.5, 1.0, d, d)).iterations
           for d in (2, 4, 6, 8)]
    assert abs(its[-1] - exact) <= 1
    assert all(abs(i - exact) <= abs(its[0] - exact) + 1 for i in its)


def test_inner_conditions_hold_as_true_residuals():
    # replay one outer step by hand and check both inner conditions
    p = conv_diff_3d(6)
    H, S = hs_split(p.A)
    a, w = 0.3, 1.9
    x = np.zeros(p.A.nrows)
    for _ in range(5):
        r = p.b - p.A.matvec(x)
        opH, opS = LinearOperator.from_matrix(H, a), LinearOperator.from_matrix(S, a)
        z, sh = cg(opH, r, None, 1e-2, 1000)
        rhs = a * (2 - w) * z
        y, ss = cgne(opS, rhs, None, 1e-2, 1000)
        assert sh.converged and ss.converged
        assert np.linalg.norm(r - opH(z)) <= 1e-2 * np.linalg.norm(r)
        assert np.linalg.norm(rhs - opS(y)) <= 1e-2 * np.linalg.norm(rhs)
        x = x + y
    rep = practical_gadi_hs(p.A, p.b, InexactConfig(a, w, max_outer=5, outer_rel_tol=1e-15))
    assert np.array_equal(rep.final_x, x)


@pytest.mark.parametrize("n", [4, 8, 12])
def test_converges_at_delta_two(n):
    p = conv_diff_3d(n)
    rep = practical_gadi_hs(p.A, p.b, InexactConfig(0.3, 1.9))
    assert rep.converged
    assert np.linalg.norm(p.b - p.A.matvec(rep.final_x)) <= 1e-6 * np.linalg.norm(p.b)


def test_ihss_forces_omega_zero(cd10):
    rep = ihss_solve(cd10.A, cd10.b, InexactConfig(0.9, 1.5))
    ref = practical_gadi_hs(cd10.A, cd10.b, InexactConfig(0.9, 0.0))
    assert rep.omega == 0.0 and rep.iterations == ref.iterations


def test_kmax_flagged_not_raised(cd10):
    rep = practical_gadi_hs(cd10.A, cd10.b, InexactConfig(0.05, 1.9, max_outer=3))
    assert rep.termination == "max_iter" and rep.iterations == 3


def test_inner_cap_default_and_hits(cd10):
    rep = practical_gadi_hs(cd10.A, cd10.b, InexactConfig(0.5, 1.0, 8, 8, inner_max_iter=2))
    assert rep.extra["inner_max_iter"] == 2 and rep.extra["inner_cap_hits"] > 0
    rep = practical_gadi_hs(cd10.A, cd10.b, InexactConfig(0.5, 1.0))
    assert rep.extra["inner_max_iter"] == int(np.ceil(10 * np.sqrt(1000)))
