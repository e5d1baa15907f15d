import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from incontext.fixtures import lip_context
from incontext.measures import mask
from incontext.universality.algebra import eval_algebra
from incontext.universality.fitting import (
    CylindricalRegressor,
    FitConfig,
    MaskedCylindricalRegressor,
    fit,
    make_pool,
    sample_contexts,
)


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(5)
    cfg = FitConfig(dim=2)
    X = sample_contexts(cfg, 200, rng)
    test = sample_contexts(cfg, 50, rng)
    return X, test


def _x_plus_mean(mu, x):
    return x + mu.mean()


def test_get_params_and_clone():
    est = CylindricalRegressor(n_terms=3, c_grid=(0.0, 1.0), random_state=7)
    params = est.get_params()
    assert params["n_terms"] == 3 and params["c_grid"] == (0.0, 1.0) and params["random_state"] == 7
    twin = clone(est)
    assert twin.get_params() == params and twin is not est
    est.set_params(ridge=1e-6)
    assert est.ridge == 1e-6


def test_recovers_x_plus_mean(data):
    X, test = data
    y = np.array([_x_plus_mean(mu, x) for mu, x in X])
    est = CylindricalRegressor(n_terms=4).fit(X, y)
    pred = est.predict(test)
    assert pred.shape == (50, 2)
    truth = np.array([_x_plus_mean(mu, x) for mu, x in test])
    assert np.abs(pred - truth).max() <= 1e-6
    assert est.n_outputs_ == 2 and est.n_features_in_ == 2
    assert est.algebra_.N == 4
    assert all(len(t) <= 4 for t in est.terms_)


def test_scalar_target_predicts_vector(data):
    X, test = data
    y = np.array([x[0] for _, x in X])
    est = CylindricalRegressor(n_terms=2).fit(X, y)
    assert est.predict(test).shape == (50,)
    assert est.score(test, [x[0] for _, x in test]) == pytest.approx(1.0)


def test_deterministic_given_seed(data):
    X, _ = data
    y = np.array([_x_plus_mean(mu, x) for mu, x in X])
    a = CylindricalRegressor(random_state=3).fit(X, y).algebra_
    b = CylindricalRegressor(random_state=3).fit(X, y).algebra_
    for f in "abcv":
        np.testing.assert_array_equal(getattr(a, f), getattr(b, f))


def test_predict_uses_folded_algebra(data):
    X, test = data
    y = np.array([np.tanh(x) * mu.mean() for mu, x in X])
    est = CylindricalRegressor(n_terms=3, n_factors=2).fit(X, y)
    mu, x = test[0]
    np.testing.assert_allclose(est.predict([test[0]])[0], eval_algebra(est.algebra_, mu, x))


def test_not_fitted_and_bad_input(data):
    X, _ = data
    with pytest.raises(NotFittedError):
        CylindricalRegressor().predict(X)
    with pytest.raises(ValueError):
        CylindricalRegressor().fit([], [])
    with pytest.raises(ValueError):
        CylindricalRegressor().fit(X, np.zeros(len(X) - 1))
    with pytest.raises(TypeError):
        CylindricalRegressor().fit([(np.zeros((2, 2)), np.zeros(2))], [0.0])
    with pytest.raises(ValueError):
        CylindricalRegressor(n_terms=0).fit(X, np.zeros(len(X)))
    with pytest.raises(ValueError):
        CylindricalRegressor(validation_fraction=1.0).fit(X, np.zeros(len(X)))


def test_pool_starts_with_deterministic_candidates():
    pool = make_pool(3, 40, np.random.default_rng(0), (1.0,), (0.0,), (0.0, 1.0), (0.0, 1.0))
    assert pool.A.shape == (40, 3)
    np.testing.assert_array_equal(pool.A[0], np.zeros(3))
    assert pool.b[0] == 1.0
    np.testing.assert_array_equal(pool.A[1], [1.0, 0.0, 0.0])


def test_error_nonincreasing_in_terms(data):
    X, test = data
    y = np.array([np.exp(x @ mu.mean()) for mu, x in X])
    truth = np.array([np.exp(x @ mu.mean()) for mu, x in test])
    errs = []
    for N in (1, 2, 4):
        est = CylindricalRegressor(n_terms=N).fit(X, y)
        errs.append(np.abs(est.predict(test) - truth).max())
    assert errs[0] >= errs[1] - 1e-9 >= errs[2] - 2e-9


def test_fit_wrapper_returns_algebra():
    A = fit(lambda mu, x: x, FitConfig(dim=1, n_terms=1, n_samples=80), seed=0)
    assert (A.dprime, A.dim, A.N) == (1, 1, 1)


def test_masked_regressor_reduces_to_masked_marginal():
    rng = np.random.default_rng(1)
    triples = []
    for _ in range(60):
        mu = lip_context(rng, 1.0, 0.3)
        triples.append((mu, rng.normal(size=2) * 0.5, float(rng.choice(mu.times))))
    y = np.array([x + mask(mu, t).space_marginal().mean() for mu, x, t in triples])
    est = MaskedCylindricalRegressor(n_terms=2).fit(triples, y)
    assert np.abs(est.predict(triples) - y).max() <= 1e-6
    pairs = MaskedCylindricalRegressor.reduce(triples[:1])
    mu, x, t = triples[0]
    np.testing.assert_allclose(pairs[0][0].points, mask(mu, t).points)
    with pytest.raises(ValueError):
        MaskedCylindricalRegressor.reduce([(mu, x, 1.5)])
