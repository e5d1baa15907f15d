import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incontext.measures import ParticleMeasure, SpaceTimeMeasure, from_tokens
from incontext.transport import (
    lipschitz_dictionary,
    spacetime_wasserstein,
    wasserstein,
    wasserstein_1d,
    weakstar_gap,
)


def test_dirac_distance():
    mu = ParticleMeasure([[0.0, 0.0]], [1.0])
    nu = ParticleMeasure([[3.0, 4.0]], [1.0])
    for p in (1, 2):
        assert wasserstein(mu, nu, p)[0] == pytest.approx(5.0)


def test_swapped_two_point_weights_hand_computed():
    # mass 0.4 travels distance 1
    mu = ParticleMeasure([[0.0], [1.0]], [0.3, 0.7])
    nu = ParticleMeasure([[0.0], [1.0]], [0.7, 0.3])
    w1, plan = wasserstein(mu, nu, 1)
    w2, _ = wasserstein(mu, nu, 2)
    assert w1 == pytest.approx(0.4, abs=1e-12)
    assert w2 == pytest.approx(np.sqrt(0.4), abs=1e-12)
    np.testing.assert_allclose(plan.dense(), [[0.3, 0.0], [0.4, 0.3]], atol=1e-12)
    assert max(plan.marginal_errors(mu, nu)) <= 1e-12


def test_split_to_midpoint():
    mu = ParticleMeasure([[-1.0], [1.0]], [0.5, 0.5])
    nu = ParticleMeasure([[0.0]], [1.0])
    assert wasserstein(mu, nu, 1)[0] == pytest.approx(1.0)
    assert wasserstein(mu, nu, 2)[0] == pytest.approx(1.0)


def test_assignment_and_lp_agree(rng):
    mu = from_tokens(rng.normal(size=(7, 3)))
    nu = from_tokens(rng.normal(size=(7, 3)))
    for p in (1, 2):
        a, _ = wasserstein(mu, nu, p, method="assignment")
        b, _ = wasserstein(mu, nu, p, method="lp")
        assert a == pytest.approx(b, abs=1e-9)


def test_argument_validation(rng):
    mu = from_tokens(rng.normal(size=(3, 2)))
    with pytest.raises(ValueError):
        wasserstein(mu, mu, 3)
    with pytest.raises(ValueError):
        wasserstein(mu, from_tokens(rng.normal(size=(3, 1))))
    with pytest.raises(ValueError):
        wasserstein(mu, from_tokens(rng.normal(size=(4, 2))), method="assignment")
    with pytest.raises(ValueError):
        wasserstein(mu, mu, method="sinkhorn")


def test_wasserstein_1d_unequal_sizes_hand_computed():
    # quantiles: {0,1} vs {0,0.5,1} -> |F^-1 - G^-1| = 0.5 on (1/3, 2/3)
    assert wasserstein_1d([0.0, 1.0], [0.0, 0.5, 1.0], p=1) == pytest.approx(0.5 / 3)
    assert wasserstein_1d([0.0, 1.0], [0.0, 0.5, 1.0], p=2) == pytest.approx(np.sqrt(0.25 / 3))


def test_spacetime_wasserstein_uses_time_axis():
    mu = SpaceTimeMeasure([[0.0]], [0.0], [1.0])
    nu = SpaceTimeMeasure([[0.0]], [0.5], [1.0])
    assert spacetime_wasserstein(mu, nu) == pytest.approx(0.5)


def test_weakstar_gap_bounded_by_w1_for_lipschitz_dictionary(rng):
    mu = from_tokens(rng.normal(size=(6, 2)))
    nu = from_tokens(rng.normal(size=(6, 2)))
    assert weakstar_gap(mu, nu, lipschitz_dictionary(2)) <= wasserstein(mu, nu, 1)[0] + 1e-12
    assert weakstar_gap(mu, mu) == 0.0


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 8), m=st.integers(1, 8), seed=st.integers(0, 2**32 - 1), p=st.sampled_from([1, 2]))
def test_lp_matches_quantile_formula_on_the_line(n, m, seed, p):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=n), rng.normal(size=m)
    lp, plan = wasserstein(from_tokens(x), from_tokens(y), p, method="lp")
    assert lp == pytest.approx(wasserstein_1d(x, y, p), abs=1e-9)
    assert max(plan.marginal_errors(from_tokens(x), from_tokens(y))) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_metric_axioms(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (from_tokens(rng.normal(size=(4, 2))) for _ in range(3))
    ab, bc, ac = (wasserstein(u, v, 2)[0] for u, v in ((a, b), (b, c), (a, c)))
    assert ab == pytest.approx(wasserstein(b, a, 2)[0], abs=1e-12)
    assert ac <= ab + bc + 1e-9
    assert wasserstein(a, a, 2)[0] <= 1e-12
