import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from posevmp.batch_oracle import batch_gaussian
from posevmp.errors import DegenerateSplit, DimensionMismatch, UndefinedEstimate
from posevmp.moments import MomentEstimator, from_mean_cov, init_from_sample, merge, split, update


def fold(samples):
    est = init_from_sample(samples[0])
    for x in samples[1:]:
        est = update(est, x)
    return est


def test_init_zero_sample():
    est = init_from_sample([0.0, 0.0])
    assert est.n == 1
    assert np.array_equal(est.mu_hat, [0, 0])
    assert np.array_equal(est.S_hat, np.zeros((2, 2)))


def test_init_outer_product():
    est = init_from_sample([1.0, 2.0])
    np.testing.assert_array_equal(est.S_hat, [[1, 2], [2, 4]])


def test_covariance_of_single_sample_is_undefined():
    with pytest.raises(UndefinedEstimate):
        init_from_sample([1.0, 2.0]).covariance()


def test_update_one_then_three():
    est = update(init_from_sample([1.0]), [3.0])
    assert est.mu_hat[0] == 2.0
    assert est.S_hat[0, 0] == 5.0
    assert est.covariance()[0, 0] == 2.0


def test_covariance_of_zero_and_two():
    assert fold([[0.0], [2.0]]).covariance()[0, 0] == 2.0


def test_identical_samples_zero_covariance():
    est = fold([[0.5, -1.0]] * 5)
    np.testing.assert_allclose(est.covariance(), 0.0, atol=1e-15)


def test_update_with_mean_keeps_mean():
    est = fold([[1.0, 2.0], [3.0, -1.0]])
    est2 = est.update(est.mu_hat)
    np.testing.assert_array_equal(est2.mu_hat, est.mu_hat)


def test_update_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        init_from_sample([1.0, 2.0]).update([1.0])


@given(st.integers(0, 10_000), st.integers(2, 40), st.integers(1, 6))
def test_incremental_matches_batch(seed, n, dim):
    X = np.random.default_rng(seed).normal(size=(n, dim)) * 3 + 1
    est = fold(X)
    mean, cov = batch_gaussian(X)
    np.testing.assert_allclose(est.mu_hat, mean, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(est.covariance(), cov, rtol=1e-9, atol=1e-12)


def test_estimator_is_immutable_under_update():
    est = init_from_sample([1.0])
    est.update([5.0])
    assert est.n == 1 and est.mu_hat[0] == 1.0


# -- merge -----------------------------------------------------------------------


def test_merge_weights_six_and_three():
    a = MomentEstimator(6, np.array([3.0]), np.array([[9.0]]))
    b = MomentEstimator(3, np.array([0.0]), np.array([[0.0]]))
    m = merge(a, b)
    assert m.n == 9
    assert m.mu_hat[0] == pytest.approx(2.0, abs=1e-15)


def test_merge_with_itself():
    a = fold(np.random.default_rng(0).normal(size=(5, 3)))
    m = merge(a, a)
    assert m.n == 10
    np.testing.assert_allclose(m.mu_hat, a.mu_hat, atol=1e-15)
    # sample covariance changes by the n/(n-1) factor only
    np.testing.assert_allclose(m.covariance() * 9 / 10, a.covariance() * 4 / 5, atol=1e-14)


def test_merge_two_singletons_equals_update():
    x, y = np.array([1.0, -2.0]), np.array([0.5, 4.0])
    m = merge(init_from_sample(x), init_from_sample(y))
    u = update(init_from_sample(x), y)
    np.testing.assert_allclose(m.mu_hat, u.mu_hat, atol=1e-15)
    np.testing.assert_allclose(m.S_hat, u.S_hat, atol=1e-15)


@given(st.integers(0, 10_000), st.integers(1, 15), st.integers(1, 15))
def test_merge_matches_batch_union(seed, na, nb):
    rng = np.random.default_rng(seed)
    A, B = rng.normal(size=(na, 3)), rng.normal(loc=2.0, size=(nb, 3))
    m = merge(fold(A), fold(B))
    mean, cov = batch_gaussian(np.vstack([A, B]))
    np.testing.assert_allclose(m.mu_hat, mean, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(m.covariance(), cov, rtol=1e-9, atol=1e-12)


def test_merge_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        merge(init_from_sample([1.0]), init_from_sample([1.0, 2.0]))


# -- split -------------------------------------------------------------------------


def test_split_hand_example():
    c = from_mean_cov(4, np.array([0.0]), np.array([[1.0]]))
    a, b = split(c, [3.0], count_factor=1.0)
    assert a.mu_hat[0] == 3.0 and b.mu_hat[0] == -3.0
    assert a.covariance()[0, 0] == pytest.approx(4.0, rel=1e-14)
    assert b.covariance()[0, 0] == pytest.approx(4.0, rel=1e-14)


def test_split_default_count_factor_halves_count_again():
    c = fold(np.random.default_rng(0).normal(size=(8, 2)))
    a, b = split(c, [1.0, 1.0])
    assert a.n == b.n == 2


def test_split_count_floor_is_one():
    c = fold(np.random.default_rng(0).normal(size=(2, 2)))
    a, b = split(c, [1.0, 1.0])
    assert a.n == b.n == 1


def test_split_degenerate_when_sample_is_mean():
    c = fold(np.random.default_rng(1).normal(size=(4, 2)))
    with pytest.warns(DegenerateSplit):
        a, b = split(c, c.mu_hat, count_factor=1.0)
    np.testing.assert_array_equal(a.mu_hat, b.mu_hat)
    np.testing.assert_allclose(a.covariance(), 1e-8 * np.eye(2), rtol=1e-6)


@given(st.integers(0, 10_000), st.floats(0.1, 1.0))
def test_merge_of_split_recovers_mean(seed, factor):
    rng = np.random.default_rng(seed)
    c = fold(rng.normal(size=(6, 4)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSplit)
        a, b = split(c, rng.normal(size=4), factor)
    np.testing.assert_allclose(merge(a, b).mu_hat, c.mu_hat, atol=1e-12)


def test_split_needs_two_samples():
    with pytest.raises(UndefinedEstimate):
        split(init_from_sample([1.0]), [2.0])


def test_from_mean_cov_roundtrip():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(3, 3))
    cov = A @ A.T
    est = from_mean_cov(5, np.array([1.0, 2.0, 3.0]), cov)
    np.testing.assert_allclose(est.covariance(), cov, rtol=1e-12, atol=1e-13)


def test_with_count_preserves_moments():
    est = fold(np.random.default_rng(3).normal(size=(4, 2)))
    red = est.with_count(2)
    assert red.n == 2
    np.testing.assert_array_equal(red.S_hat, est.S_hat)
