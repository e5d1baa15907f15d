import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incontext.fixtures import random_measure, separation_pairs
from incontext.measures import ParticleMeasure, from_tokens
from incontext.universality.elementary import (
    ElementaryParams,
    equals_attention_form,
    gamma_elementary,
    laplace,
    laplace_k,
    separation_probe,
)

BERNOULLI = ParticleMeasure([[0.0], [1.0]], [0.5, 0.5])


@pytest.mark.parametrize("c", [-2.0, 0.0, 0.7, 3.0])
def test_bernoulli_closed_form(c):
    # u = 1, projected particles {0, 1}: gamma = 1 + e^c / (1 + e^c)
    lam = ElementaryParams([1.0], 0.0, c, 1.0)
    assert gamma_elementary(lam, BERNOULLI, [1.0]) == pytest.approx(1.0 + np.exp(c) / (1.0 + np.exp(c)), abs=1e-15)
    assert laplace_k(BERNOULLI, c, 1) == pytest.approx(np.exp(c) / (1.0 + np.exp(c)), abs=1e-15)


def test_zero_temperature_is_affine_plus_mean(rng):
    mu = random_measure(rng, 7, 3, uniform=False)
    a, b = rng.normal(size=3), 0.4
    x = rng.normal(size=3)
    lam = ElementaryParams(a, b, 0.0, 2.0)
    expected = x @ a + b + 2.0 * (mu.mean() @ a + b)
    assert gamma_elementary(lam, mu, x) == pytest.approx(expected, abs=1e-13)


def test_zero_gain_is_affine(rng):
    mu = random_measure(rng, 5, 2)
    lam = ElementaryParams([1.0, -2.0], 0.5, 1.3, 0.0)
    assert gamma_elementary(lam, mu, [1.0, 1.0]) == pytest.approx(-0.5)


def test_closed_form_equals_attention_stack(rng):
    fixtures = [(random_measure(rng, int(rng.integers(1, 10)), 3), rng.normal(size=3)) for _ in range(20)]
    for _ in range(5):
        lam = ElementaryParams(rng.normal(size=3), rng.normal(), rng.normal(), rng.normal())
        res = equals_attention_form(lam, fixtures)
        assert res["fixtures"] == 20
        assert res["max_deviation"] <= 1e-12


def test_laplace_recursion_bernoulli_moments():
    # for a {0,1} measure every moment equals the first
    for k in (1, 2, 5):
        assert laplace_k(BERNOULLI, 0.3, k) == pytest.approx(laplace_k(BERNOULLI, 0.3, 1))


def test_laplace_is_tilted_mean(rng):
    mu = random_measure(rng, 6, 2)
    a = np.array([0.6, 0.8])
    s = mu.points @ a
    w = mu.weights * np.exp(1.5 * s)
    assert laplace(mu, a, 1.5) == pytest.approx((w * s).sum() / w.sum())


def test_input_validation():
    with pytest.raises(ValueError):
        ElementaryParams([1.0], np.inf, 0.0, 0.0)
    with pytest.raises(ValueError):
        laplace_k(from_tokens([[0.0, 1.0]]), 1.0, 1)
    with pytest.raises(ValueError):
        laplace_k(BERNOULLI, 1.0, 0)
    with pytest.raises(ValueError):
        gamma_elementary(ElementaryParams([1.0, 0.0], 0, 0, 0), BERNOULLI, [1.0, 0.0])


def test_extreme_temperatures_stay_finite():
    lam = ElementaryParams([1.0], 0.0, 1e4, 1.0)
    val = gamma_elementary(lam, BERNOULLI, [1.0])
    assert val == pytest.approx(2.0)


def test_separation_of_distinct_pairs():
    for name, mu, nu in separation_pairs():
        assert separation_probe(mu, nu) >= 1e-6, name
        assert separation_probe(mu, mu) == 0.0


@settings(max_examples=40, deadline=None)
@given(c=st.floats(-5, 5), seed=st.integers(0, 2**32 - 1))
def test_tilted_mean_within_support_hull(c, seed):
    rng = np.random.default_rng(seed)
    mu = random_measure(rng, 6, 1, uniform=False)
    m = laplace_k(mu, c, 1)
    assert mu.points.min() - 1e-12 <= m <= mu.points.max() + 1e-12


@settings(max_examples=40, deadline=None)
@given(c=st.floats(-4, 4), seed=st.integers(0, 2**32 - 1))
def test_derivative_of_tilted_mean_is_tilted_variance(c, seed):
    # d/dc L_1 = L_2 - L_1^2
    rng = np.random.default_rng(seed)
    mu = random_measure(rng, 5, 1)
    h = 1e-5
    deriv = (laplace_k(mu, c + h, 1) - laplace_k(mu, c - h, 1)) / (2 * h)
    assert deriv == pytest.approx(laplace_k(mu, c, 2) - laplace_k(mu, c, 1) ** 2, abs=1e-6)


def test_zero_direction_unit_offset_and_gain_is_constant_two(rng):
    # skip term b = 1 plus the averaged projection b = 1
    lam = ElementaryParams(np.zeros(2), 1.0, rng.normal(), 1.0)
    for _ in range(3):
        assert gamma_elementary(lam, random_measure(rng, 4, 2), rng.normal(size=2)) == 2.0
