import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gadi.exceptions import DimensionError
from gadi.gpr import GprModel, fit, kernel, log_marginal_likelihood, predict, retrain
from oracles import gp_posterior


def test_kernel_examples():
    assert kernel(3.0, 3.0, 0.7, 2.0) == pytest.approx(4.0)
    assert kernel(0.0, 2.0, 1.0, 1.0) == pytest.approx(math.exp(-1.0))
    assert kernel(0.0, 2.0, 1.0, 1.0) == pytest.approx(0.3679, abs=1e-4)


@given(st.floats(-100, 100), st.floats(-100, 100), st.floats(0.01, 10), st.floats(0.01, 10))
def test_kernel_symmetric(x, y, iota, sf):
    assert kernel(x, y, iota, sf) == kernel(y, x, iota, sf)


def test_lml_single_point():
    sf, noise = 1.3, 1e-4
    got = log_marginal_likelihood([2.0], [0.0], 0.5, sf, noise)
    assert got == pytest.approx(-0.5 * math.log(sf ** 2 + noise ** 2) - 0.5 * math.log(2 * math.pi))


def test_lml_two_points_closed_form():
    x, y = np.array([0.0, 1.5]), np.array([0.4, -0.2])
    iota, sf, noise = 0.8, 1.1, 1e-2
    k12 = sf ** 2 * math.exp(-1.5 / (2 * iota ** 2))
    d = sf ** 2 + noise ** 2
    det = d * d - k12 * k12
    inv = np.array([[d, -k12], [-k12, d]]) / det
    ref = -0.5 * y @ inv @ y - 0.5 * math.log(det) - math.log(2 * math.pi)
    assert log_marginal_likelihood(x, y, iota, sf, noise) == pytest.approx(ref, abs=1e-12)


def test_lml_decreases_with_target_scale():
    x = np.arange(5.0)
    y = np.sin(x)
    vals = [log_marginal_likelihood(x, s * y, 1.0, 1.0) for s in (1, 2, 4)]
    assert vals[0] > vals[1] > vals[2]


def test_fit_constant_targets():
    x = np.arange(1.0, 11.0)
    m = fit(x, np.full(10, 0.7))
    for xs in (1.5, 5.5, 9.9):
        assert abs(m.predict(xs).mean - 0.7) <= 1e-3


def test_fit_beats_generating_theta(rng):
    x = np.linspace(0, 10, 12)
    iota, sf, noise = 1.5, 0.8, 1e-4
    K = kernel(x[:, None], x[None, :], iota, sf) + noise ** 2 * np.eye(12)
    y = np.linalg.cholesky(K) @ rng.standard_normal(12)
    m = fit(x, y, noise=noise, rescale=False)
    assert m.log_likelihood() >= log_marginal_likelihood(x, y, iota, sf, noise) - 1e-6


def test_fit_deterministic():
    x, y = [2, 4, 6, 8, 10], [1.0, 0.55, 0.33, 0.24, 0.18]
    a, b = fit(x, y), fit(x, y)
    assert a.theta == b.theta


def test_fit_needs_two_distinct_inputs():
    with pytest.raises(DimensionError):
        fit([1.0], [2.0])
    with pytest.raises(DimensionError):
        fit([1.0, 1.0, 2.0], [2.0, 2.0, 3.0])


def test_predict_at_training_input():
    x, y = [2, 4, 6, 8, 10], [1.0, 0.55, 0.33, 0.24, 0.18]
    m = fit(x, y)
    for xi, yi in zip(x, y):
        assert abs(predict(m, xi).mean - yi) <= 1e-2 * abs(yi) + 1e-4


def test_predict_far_away_reverts_to_prior():
    m = GprModel([0.0, 1.0], [0.5, 0.6], iota=0.5, sigma_f=0.9)
    p = m.predict(1e4)
    assert abs(p.mean) <= 1e-12 and p.variance == pytest.approx(0.81)


def test_posterior_vs_dense_oracle():
    x, y = np.array([0.0, 0.7, 2.0]), np.array([0.3, -0.1, 0.5])
    m = GprModel(x, y, iota=0.9, sigma_f=1.2, noise=1e-2)
    for xs in (-0.5, 0.35, 1.1, 3.0):
        mean, var = gp_posterior(x, y, xs, 0.9, 1.2, 1e-2)
        p = m.predict(xs)
        assert p.mean == pytest.approx(mean, abs=1e-12)
        assert p.variance == pytest.approx(var, abs=1e-12)


@given(st.lists(st.floats(-20, 20), min_size=2, max_size=12, unique=True),
       st.floats(0.05, 5), st.floats(0.05, 5), st.floats(-25, 25))
def test_variance_bounds_and_ci(xs, iota, sf, x_star):
    m = GprModel(xs, np.zeros(len(xs)), iota, sf, noise=1e-3)
    p = m.predict(x_star)
    assert 0.0 <= p.variance <= sf ** 2 + 1e-10
    assert p.ci_low == pytest.approx(p.mean - 1.96 * math.sqrt(p.variance))
    assert p.ci_high == pytest.approx(p.mean + 1.96 * math.sqrt(p.variance))


@given(st.integers(0, 2**31 - 1))
def test_predict_linear_in_targets(seed):
    rng = np.random.default_rng(seed)
    x = np.linspace(0, 5, 6)
    y1, y2 = rng.standard_normal((2, 6))
    a, b = rng.standard_normal(2)
    mk = lambda y: GprModel(x, y, 0.7, 1.0).predict(2.3).mean
    assert mk(a * y1 + b * y2) == pytest.approx(a * mk(y1) + b * mk(y2), abs=1e-10)


@given(st.lists(st.floats(0, 50), min_size=2, max_size=15, unique=True),
       st.floats(0.05, 10), st.floats(0.05, 10))
def test_gram_factorization_succeeds(xs, iota, sf):
    m = GprModel(xs, np.ones(len(xs)), iota, sf, noise=1e-6)
    z = m.inputs / m.input_scale
    K = kernel(z[:, None], z[None, :], iota, sf) + 1e-12 * np.eye(len(xs))
    assert np.allclose(m.chol @ m.chol.T, K, rtol=1e-10, atol=1e-10 * sf ** 2)


def test_save_load_reproduces_predictions(tmp_path):
    m = fit([2, 4, 6, 8], [1.0, 0.55, 0.33, 0.24])
    m.save(tmp_path / "m.json")
    m2 = GprModel.load(tmp_path / "m.json")
    for x in (3.0, 7.0, 12.0):
        a, b = m.predict(x), m2.predict(x)
        assert abs(a.mean - b.mean) <= 1e-12 and abs(a.variance - b.variance) <= 1e-12


def test_rescaling_is_reparameterization():
    x, y = [2.0, 4.0, 8.0], [1.0, 0.5, 0.25]
    a = GprModel(x, y, iota=1.0, sigma_f=1.0, input_scale=1.0)
    # same kernel on raw n after scaling iota by sqrt(scale)
    b = GprModel(x, y, iota=1.0 / math.sqrt(8.0), sigma_f=1.0, input_scale=8.0)
    assert a.predict(5.0).mean == pytest.approx(b.predict(5.0).mean, rel=1e-12)


def test_retrain_empty_is_noop():
    m = fit([2, 4, 6, 8], [1.0, 0.55, 0.33, 0.24])
    m2 = retrain(m, [])
    assert m2.theta == m.theta and m2.predict(5.0) == m.predict(5.0)


def test_retrain_skips_duplicates():
    m = fit([2, 4, 6, 8], [1.0, 0.55, 0.33, 0.24])
    with pytest.warns(UserWarning):
        m2 = retrain(m, [4.0])
    assert m2 is m


def test_retrain_shrinks_ci_and_keeps_targets():
    x, y = [2, 4, 6, 8, 10, 12], [1.01, 0.55, 0.33, 0.24, 0.18, 0.15]
    m = fit(x, y)
    new = [5.0, 9.0, 14.0]
    m2 = retrain(m, new)
    for xs in new:
        assert m2.predict(xs).ci_width <= m.predict(xs).ci_width
    for xi, yi in zip(x, y):
        assert abs(m2.predict(xi).mean - yi) <= 1e-2 * abs(yi) + 1e-4
