"""Noise models report exact constants; the toy problem matches its source."""

import math

import numpy as np
import pytest

from signopt import (GaussianPerCoord, NoNoise, QuadraticProblem, SkewedTwoPoint,
                     SparseGaussian, StochasticOracle, UniformPerCoord,
                     draw_noisy_gradient, initial_point, make_rng,
                     make_sparse_noise_problem, validate_objective)

ALL_VARIANTS = [
    NoNoise(),
    GaussianPerCoord(np.array([0.5, 1.0, 2.0])),
    SparseGaussian(3.0, (1,)),
    UniformPerCoord(np.array([1.0, 2.0, 0.5])),
    SkewedTwoPoint(coordinate=2),
]


def test_sigma_vector_closed_forms():
    d = 3
    np.testing.assert_array_equal(NoNoise().sigma_vector(d), np.zeros(d))
    np.testing.assert_array_equal(GaussianPerCoord(np.array([0.5, 1.0, 2.0])).sigma_vector(d),
                                  [0.5, 1.0, 2.0])
    np.testing.assert_array_equal(SparseGaussian(3.0, (1,)).sigma_vector(d), [0.0, 3.0, 0.0])
    np.testing.assert_allclose(UniformPerCoord(np.array([1.0, 2.0, 0.5])).sigma_vector(d),
                               np.array([1.0, 2.0, 0.5]) / math.sqrt(3.0))


def test_skewed_two_point_constants():
    tp = SkewedTwoPoint()
    # mean = 0.1*50 - 0.9*1 and std = sqrt(0.1*50^2 + 0.9*1 - mean^2) = 15.3
    assert tp.mean == pytest.approx(4.1)
    assert tp.std == pytest.approx(15.3)
    sig = tp.sigma_vector(4)
    assert sig[0] == pytest.approx(15.3) and np.all(sig[1:] == 0)


def test_skewed_two_point_raw_probabilities():
    tp = SkewedTwoPoint()
    draws = tp.raw_samples(200_000, make_rng(3))
    assert set(np.unique(draws)) == {-1.0, 50.0}
    p_hi = np.mean(draws == 50.0)
    se = math.sqrt(0.1 * 0.9 / draws.size)
    assert abs(p_hi - 0.1) < 4 * se
    assert abs(draws.mean() - 4.1) < 4 * tp.std / math.sqrt(draws.size)


def test_skewed_sign_agreement_with_mean_is_one_tenth():
    # The vote pathology: a single draw agrees with the sign of its positive
    # mean only when it lands on the rare high point.
    tp = SkewedTwoPoint()
    draws = tp.raw_samples(100_000, make_rng(11))
    agree = np.mean(draws > 0)
    se = math.sqrt(0.1 * 0.9 / draws.size)
    assert abs(agree - 0.1) < 4 * se


@pytest.mark.parametrize("noise", ALL_VARIANTS, ids=lambda n: type(n).__name__)
def test_noise_zero_mean_and_variance_bound(noise):
    d = 3
    rows = noise.sample_batch(100_000, d, make_rng(5))
    sigma = noise.sigma_vector(d)
    se_mean = sigma / math.sqrt(rows.shape[0])
    assert np.all(np.abs(rows.mean(axis=0)) <= 4 * se_mean + 1e-12)
    var = rows.var(axis=0)
    se_var = sigma ** 2 * math.sqrt(2 / rows.shape[0])
    assert np.all(var <= sigma ** 2 + 4 * se_var + 1e-12)


@pytest.mark.parametrize("noise", ALL_VARIANTS, ids=lambda n: type(n).__name__)
def test_standard_samples_unit_variance(noise):
    s = noise.standard_samples(100_000, make_rng(7))
    if isinstance(noise, NoNoise):
        assert np.all(s == 0)
        return
    assert abs(s.mean()) < 4 / math.sqrt(s.size)
    assert abs(s.var() - 1.0) < 4 * math.sqrt(2 / s.size) + 0.01


def test_draw_noisy_gradient_none_is_exact():
    quad = QuadraticProblem(np.array([1.0, 2.0]))
    obj = quad.spec(NoNoise())
    x = np.array([0.5, -1.0])
    np.testing.assert_array_equal(draw_noisy_gradient(obj, NoNoise(), x, make_rng(0)),
                                  obj.gradient(x))


def test_draw_noisy_gradient_gaussian_std():
    quad = QuadraticProblem(np.ones(2))
    noise = GaussianPerCoord(1.0)
    obj = quad.spec(noise)
    rng = make_rng(13)
    draws = np.array([draw_noisy_gradient(obj, noise, np.zeros(2), rng)
                      for _ in range(100_000)])
    assert np.all(np.abs(draws.std(axis=0) - 1.0) < 0.02)


def test_draw_noisy_gradient_index_out_of_range():
    quad = QuadraticProblem(np.ones(2))
    noise = SparseGaussian(1.0, (5,))
    obj = quad.spec(NoNoise())
    with pytest.raises(ValueError, match="index out of range"):
        draw_noisy_gradient(obj, noise, np.zeros(2), make_rng(0))


def test_skewed_recentred_draw_at_mean_point_is_raw_variable():
    # Where the true gradient coordinate equals the raw mean, the stochastic
    # coordinate is exactly the 50 / -1 variable.
    tp = SkewedTwoPoint(coordinate=0)
    quad = QuadraticProblem(np.ones(1))
    obj = quad.spec(tp)
    rng = make_rng(2)
    draws = np.array([draw_noisy_gradient(obj, tp, np.array([4.1]), rng)[0]
                      for _ in range(2000)])
    assert set(np.round(np.unique(draws), 12)) == {-1.0, 50.0}


def test_quadratic_gradient_and_minimum():
    quad = QuadraticProblem(np.array([2.0, 0.5, 1.0]))
    x = np.array([1.0, -4.0, 0.0])
    np.testing.assert_array_equal(quad.gradient(x), quad.a * x)
    assert quad.value(np.zeros(3)) == 0.0
    with pytest.raises(ValueError):
        QuadraticProblem(np.array([1.0, 0.0]))


def test_quadratic_majorization_is_exact():
    quad = QuadraticProblem(np.array([0.5, 2.0, 1.5]))
    rng = make_rng(8)
    for _ in range(50):
        x = rng.standard_normal(3)
        y = rng.standard_normal(3)
        lhs = abs(quad.value(y) - quad.value(x) - float(np.dot(quad.gradient(x), y - x)))
        rhs = 0.5 * float(np.sum(quad.a * (y - x) ** 2))
        np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-12)


def test_quadratic_satisfies_objective_contract():
    validate_objective(QuadraticProblem(np.array([0.5, 2.0])).spec(NoNoise()), seed=4)


def test_toy_problem_matches_published_setup():
    obj, oracle = make_sparse_noise_problem(0)
    assert obj.dim == 100
    expected_sigma = np.zeros(100)
    expected_sigma[0] = 100.0
    np.testing.assert_array_equal(obj.sigma, expected_sigma)
    np.testing.assert_array_equal(obj.lipschitz, np.ones(100))
    assert isinstance(oracle, StochasticOracle)


def test_toy_initial_point_unit_gaussian():
    xs = np.array([initial_point(100, seed) for seed in range(200)])
    assert abs(xs.mean()) < 4 / math.sqrt(xs.size)
    assert abs(xs.var() - 1.0) < 4 * math.sqrt(2 / xs.size)
    np.testing.assert_array_equal(initial_point(100, 7), initial_point(100, 7))
