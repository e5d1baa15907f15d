import numpy as np
import pytest

from incontext.fixtures import random_measure
from incontext.universality.algebra import AlgebraElement, eval_algebra, gamma_bar, lift_to_vector, lifted_value
from incontext.universality.elementary import ElementaryParams, gamma_elementary


def _random_element(rng, dp=2, T=2, N=3, d=2):
    return AlgebraElement(rng.normal(size=(dp, T, N, d)), rng.normal(size=(dp, T, N)),
                          rng.normal(size=(dp, T, N)), rng.normal(size=(dp, T, N)))


@pytest.fixture
def context(rng):
    return random_measure(rng, 6, 2), rng.normal(size=2)


def test_shape_validation():
    with pytest.raises(ValueError):
        AlgebraElement(np.zeros((1, 1, 1)), 0, 0, 0)
    with pytest.raises(ValueError):
        AlgebraElement(np.zeros((1, 1, 2, 3)), np.zeros((1, 1, 1)), np.zeros((1, 1, 2)), np.zeros((1, 1, 2)))


def test_evaluation_is_sum_of_products(rng, context):
    mu, x = context
    A = _random_element(rng)
    expected = np.zeros(A.dprime)
    for h in range(A.dprime):
        for n in range(A.N):
            expected[h] += np.prod([gamma_elementary(A.param(h, t, n), mu, x) for t in range(A.T)])
    np.testing.assert_allclose(eval_algebra(A, mu, x), expected, rtol=1e-13)
    np.testing.assert_array_equal(A(mu, x), eval_algebra(A, mu, x))


def test_constant(context):
    mu, x = context
    np.testing.assert_allclose(AlgebraElement.constant([2.0, -1.0], 2, T=3)(mu, x), [2.0, -1.0])


def test_sum_and_product_closure(rng, context):
    mu, x = context
    A, B = _random_element(rng, T=1, N=2), _random_element(rng, T=2, N=3)
    np.testing.assert_allclose((A + B)(mu, x), A(mu, x) + B(mu, x), rtol=1e-12)
    prod = A * B
    assert (prod.T, prod.N) == (3, 6)
    np.testing.assert_allclose(prod(mu, x), A(mu, x) * B(mu, x), rtol=1e-12)


@pytest.mark.parametrize("alpha", [3.0, -0.5, 0.0])
def test_scale_fold(rng, context, alpha):
    mu, x = context
    A = _random_element(rng)
    np.testing.assert_allclose((alpha * A)(mu, x), alpha * A(mu, x), atol=1e-12)


def test_scale_identity_on_single_factor(rng, context):
    mu, x = context
    lam = ElementaryParams(rng.normal(size=2), 0.3, 0.8, 1.1)
    scaled = ElementaryParams(2.5 * lam.a, 2.5 * lam.b, lam.c / 2.5 ** 2, lam.v)
    assert gamma_elementary(scaled, mu, x) == pytest.approx(2.5 * gamma_elementary(lam, mu, x))


def test_mismatched_operands(rng):
    with pytest.raises(ValueError):
        _random_element(rng, dp=2) + _random_element(rng, dp=1)


def test_vector_lift_matches_closed_form(rng, context):
    mu, x = context
    A = _random_element(rng, dp=3)
    factors = lift_to_vector(A)
    assert [(f.t, f.n) for f in factors] == [(t, n) for n in range(A.N) for t in range(A.T)]
    for f in factors:
        assert f.attention.H == A.dprime
        np.testing.assert_allclose(lifted_value(f, mu, x), gamma_bar(A, f.t, f.n, mu, x), atol=1e-12)
