import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incontext.fixtures import lip_context, random_spacetime
from incontext.measures import (
    ParticleMeasure,
    SpaceTimeMeasure,
    TimeMarginal,
    disintegrate,
    end_point,
    from_spacetime_tokens,
    from_tokens,
    lipschitz_estimate,
    mask,
    pushforward,
    pushforward_space,
    recombine,
    same_particles,
    sigma_mass,
    time_marginal,
)


def test_particle_measure_validates_and_freezes():
    mu = ParticleMeasure([[0.0], [2.0]], [0.25, 0.75])
    with pytest.raises(ValueError, match="sum"):
        ParticleMeasure([[0.0], [2.0]], [1.0, 3.0])
    assert mu.dim == 1 and mu.size == 2
    np.testing.assert_allclose(mu.mean(), [1.5])
    with pytest.raises(ValueError):
        mu.points[0, 0] = 5.0


@pytest.mark.parametrize("points, weights", [
    ([[0.0]], [-1.0]),
    ([[0.0], [1.0]], [1.0]),
    ([[np.nan]], [1.0]),
    (np.zeros((0, 2)), []),
    ([[0.0]], [0.0]),
])
def test_particle_measure_rejects_bad_input(points, weights):
    with pytest.raises(ValueError):
        ParticleMeasure(points, weights)


def test_spacetime_rejects_times_outside_unit_interval():
    with pytest.raises(ValueError):
        SpaceTimeMeasure([[0.0]], [1.5], [1.0])


def test_from_tokens_uniform_and_default_times():
    mu = from_tokens([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    np.testing.assert_allclose(mu.weights, 1 / 3)
    st_mu = from_spacetime_tokens([[1.0], [2.0], [3.0], [4.0]])
    np.testing.assert_allclose(st_mu.times, [0.25, 0.5, 0.75, 1.0])


def test_mask_keeps_prefix_and_renormalises():
    mu = from_spacetime_tokens([[1.0], [2.0], [3.0], [4.0]])
    m = mask(mu, 0.5)
    np.testing.assert_allclose(m.points.ravel(), [1.0, 2.0])
    np.testing.assert_allclose(m.weights, [0.5, 0.5])
    assert mask(mu, 1.0) is mu
    with pytest.raises(ValueError, match="null"):
        mask(mu, 0.1)
    with pytest.raises(ValueError):
        mask(mu, 1.2)


def test_mask_includes_atoms_within_time_tolerance():
    mu = SpaceTimeMeasure([[0.0], [1.0]], [0.0, 0.3], [0.5, 0.5])
    assert mask(mu, 0.3 - 1e-13).size == 2


def test_time_marginal_aggregates_and_end_point():
    mu = SpaceTimeMeasure([[0.0], [1.0], [2.0]], [0.0, 0.5, 0.5], [0.2, 0.3, 0.5])
    tm = time_marginal(mu)
    assert tm.times == (0.0, 0.5)
    np.testing.assert_allclose(tm.masses, [0.2, 0.8])
    assert end_point(mu) == 0.5
    assert sigma_mass(mu) == pytest.approx(0.2)
    assert tm.mass_up_to(0.25) == pytest.approx(0.2)


def test_time_marginal_invariants():
    with pytest.raises(ValueError):
        TimeMarginal((0.5, 0.2), (0.5, 0.5))
    with pytest.raises(ValueError):
        TimeMarginal((0.0,), (0.5,))


def test_disintegrate_recombine_round_trip(rng):
    mu = lip_context(rng, 1.0, 0.3)
    dis = disintegrate(mu)
    assert [tau for tau, _ in dis.groups] == list(time_marginal(mu).times)
    assert same_particles(recombine(dis), mu)


def test_pushforward_moves_points_keeps_weights(rng):
    w = rng.uniform(0.1, 1, 5)
    mu = ParticleMeasure(rng.normal(size=(5, 2)), w / w.sum())
    nu = pushforward(mu, lambda x: 2 * x + 1)
    np.testing.assert_allclose(nu.points, 2 * mu.points + 1)
    np.testing.assert_array_equal(nu.weights, mu.weights)


def test_mask_commutes_with_space_pushforward(rng):
    mu = random_spacetime(rng, 9, 2)

    def T(x, t):
        return np.sin(x) + t

    for t in (1 / 9, 0.5, 1.0):
        assert same_particles(mask(pushforward_space(mu, T), t), pushforward_space(mask(mu, t), T))


def test_lipschitz_estimate_of_translated_cloud():
    base = np.array([[0.0, 0.0], [1.0, 0.0]])
    pts = np.vstack([base, base + [0.5, 0.0]])
    mu = SpaceTimeMeasure(pts, [0.0, 0.0, 0.25, 0.25], np.full(4, 0.25))
    # W_2 between the slices is 0.5 over a time step 0.25
    assert lipschitz_estimate(mu) == pytest.approx(2.0)


def test_same_particles_is_order_insensitive():
    a = ParticleMeasure([[0.0], [1.0]], [0.3, 0.7])
    b = ParticleMeasure([[1.0], [0.0]], [0.7, 0.3])
    assert same_particles(a, b)
    assert not same_particles(a, ParticleMeasure([[1.0], [0.0]], [0.3, 0.7]))


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 12), t=st.floats(0, 1), seed=st.integers(0, 2**32 - 1))
def test_mask_is_a_probability_measure_supported_before_t(n, t, seed):
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.1, 1, n)
    mu = SpaceTimeMeasure(rng.normal(size=(n, 2)), np.r_[0.0, rng.uniform(size=n - 1)], w / w.sum())
    m = mask(mu, t)
    assert np.all(m.times <= t + 1e-12)
    assert m.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert m.size == int(np.sum(mu.times <= t + 1e-12))
