import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incontext.universality.product_mlp import ProductMlpError, build_product_mlp, certify, product_error_bound


@pytest.fixture(scope="module")
def phi():
    return build_product_mlp(2, R=3.0, eps=1e-6)


def test_meets_requested_accuracy(phi):
    assert phi.sampled_error <= phi.eps
    assert phi.analytic_error <= phi.eps
    assert phi.n_certified >= 10_000
    assert phi.dprime == 2


def test_depth_is_the_smallest_meeting_the_bound(phi):
    m = phi.sawtooth_depth
    assert product_error_bound(3.0, m) <= 1e-6 < product_error_bound(3.0, m - 1)


def test_error_bound_halves_twice_per_level():
    assert product_error_bound(2.0, 3) == pytest.approx(product_error_bound(2.0, 2) / 4)
    assert product_error_bound(1.0, 0) == 0.25


def test_exact_symmetries(phi):
    # Phi is built from the same |s| approximation applied to x + y and x - y
    x = np.array([0.7, -1.1])
    np.testing.assert_array_equal(phi(x, np.zeros(2)), np.zeros(2))
    np.testing.assert_allclose(phi(x, -x), -phi(x, x), atol=1e-15)


def test_single_output_value():
    one = build_product_mlp(1, R=2.0, eps=1e-6)
    assert abs(one([1.5], [-1.2])[0] + 1.8) <= 1e-6


def test_batch_evaluation(phi, rng):
    x, y = rng.uniform(-1, 1, size=(5, 2)), rng.uniform(-1, 1, size=(5, 2))
    out = phi(x, y)
    assert out.shape == (5, 2)
    np.testing.assert_allclose(out, x * y, atol=1e-6)


def test_certify_reports_error_of_a_foreign_network(phi):
    err, count = certify(phi.mlp, 2, 3.0, n_points=500)
    assert err <= 1e-6 and count >= 500


def test_unreachable_accuracy_reports_achieved_error():
    with pytest.raises(ProductMlpError) as info:
        build_product_mlp(1, R=10.0, eps=1e-12, max_depth=3)
    assert info.value.achieved == pytest.approx(product_error_bound(10.0, 3))


@pytest.mark.parametrize("args", [(1, 0.0, 1e-3), (1, 1.0, 0.0), (0, 1.0, 1e-3)])
def test_argument_validation(args):
    with pytest.raises(ValueError):
        build_product_mlp(*args)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(-2.0, 2.0), y=st.floats(-2.0, 2.0))
def test_product_within_eps_on_the_ball(x, y):
    phi1 = _PHI1
    if np.hypot(x, y) <= 2.0:
        assert abs(phi1([x], [y])[0] - x * y) <= 1e-5


_PHI1 = build_product_mlp(1, R=2.0, eps=1e-5, n_certify=2000)
