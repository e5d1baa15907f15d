import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from incontext.attention import (
    Attention,
    ContextFree,
    HeadParams,
    LayerStack,
    MlpParams,
    MultiHeadParams,
    att_tokens,
    attention_weights,
    compose_masked,
    compose_unmasked,
    gamma_masked,
    gamma_unmasked,
    transform_measure,
    transform_spacetime,
    transformer_tokens,
)
from incontext.fixtures import random_multihead, random_stack
from incontext.measures import ParticleMeasure, SpaceTimeMeasure, from_spacetime_tokens, from_tokens


def _scalar_head(q=1.0, k=1.0, v=1.0):
    return HeadParams([[k]], [[q]], [[v]])


def test_single_token_attention_returns_value():
    head = HeadParams(np.eye(2), np.eye(2), [[2.0, 0.0], [0.0, 3.0]])
    np.testing.assert_allclose(att_tokens(head, [[1.0, 1.0]]), [[2.0, 3.0]])


def test_two_token_softmax_hand_computed():
    # scores x_i * x_j with tokens 0 and 1: second row weights e^0, e^1
    out = att_tokens(_scalar_head(), [[0.0], [1.0]])
    e = np.e
    np.testing.assert_allclose(out.ravel(), [0.5, e / (1 + e)])


def test_masked_first_token_sees_only_itself():
    out = att_tokens(_scalar_head(), [[3.0], [1.0], [-2.0]], masked=True)
    assert out[0, 0] == 3.0


def test_multihead_has_skip_connection():
    theta = MultiHeadParams(((np.zeros((1, 1)), _scalar_head()),))
    np.testing.assert_allclose(gamma_unmasked(theta, from_tokens([[1.0], [2.0]]), [5.0]), [5.0])


def test_gamma_unmasked_merges_duplicate_particles(rng):
    theta = random_multihead(rng, 2, 2)
    pts = rng.normal(size=(3, 2))
    dup = ParticleMeasure(np.vstack([pts, pts[:1]]), [0.25, 0.25, 0.25, 0.25])
    merged = ParticleMeasure(pts, [0.5, 0.25, 0.25])
    x = rng.normal(size=2)
    np.testing.assert_allclose(gamma_unmasked(theta, dup, x), gamma_unmasked(theta, merged, x), atol=1e-14)


def test_gamma_masked_ignores_future(rng):
    theta = random_multihead(rng, 2, 1)
    mu = from_spacetime_tokens(rng.normal(size=(4, 2)))
    early = from_spacetime_tokens(mu.points[:2], [0.25, 0.5])
    x = rng.normal(size=2)
    np.testing.assert_allclose(gamma_masked(theta, mu, x, 0.5), gamma_unmasked(theta, early.space_marginal(), x),
                               atol=1e-14)


def test_attention_weights_sum_to_one_and_respect_mask(rng):
    head = HeadParams(rng.normal(size=(2, 2)), rng.normal(size=(2, 2)), rng.normal(size=(2, 2)))
    mu = from_spacetime_tokens(rng.normal(size=(5, 2)))
    w = attention_weights(head, mu, rng.normal(size=2), t=0.4)
    assert w.sum() == pytest.approx(1.0)
    assert np.all(w[2:] == 0.0)


def test_large_scores_do_not_overflow():
    head = HeadParams([[1e3]], [[1e3]], [[1.0]])
    out = att_tokens(head, [[1.0], [2.0]])
    assert np.all(np.isfinite(out))
    assert out[1, 0] == pytest.approx(2.0)


def test_stack_rejects_mismatch_and_mixed_masks(rng):
    a = Attention(random_multihead(rng, 2, 1))
    with pytest.raises(ValueError):
        LayerStack((a, ContextFree(MlpParams.identity(3))))
    with pytest.raises(ValueError):
        LayerStack((a, Attention(random_multihead(rng, 2, 1), masked=True)))
    with pytest.raises(ValueError):
        compose_unmasked(LayerStack((Attention(random_multihead(rng, 2, 1), True),)), from_tokens([[0.0, 0.0]]),
                         [0.0, 0.0])


def test_head_shape_validation():
    with pytest.raises(ValueError):
        HeadParams(np.eye(2), np.eye(3), np.eye(2))
    with pytest.raises(ValueError):
        MultiHeadParams(())


def test_measure_path_matches_token_path(rng):
    for _ in range(10):
        stack = random_stack(rng)
        X = rng.normal(size=(6, stack.d_in))
        tok = transformer_tokens(stack, X)
        P, _ = transform_measure(stack, from_tokens(X))
        np.testing.assert_allclose(P, tok, atol=1e-10)
        np.testing.assert_allclose(compose_unmasked(stack, from_tokens(X), X[2]), tok[2], atol=1e-10)


def test_masked_measure_path_matches_index_masking(rng):
    for _ in range(10):
        stack = random_stack(rng, masked=True)
        X = rng.normal(size=(6, stack.d_in))
        tok = transformer_tokens(stack, X)
        mu = from_spacetime_tokens(X)
        P, pushed = transform_spacetime(stack, mu)
        np.testing.assert_allclose(P, tok, atol=1e-10)
        np.testing.assert_array_equal(pushed.times, mu.times)
        np.testing.assert_allclose(compose_masked(stack, mu, X[3], 4 / 6), tok[3], atol=1e-10)


def test_trace_records_every_layer(rng):
    stack = random_stack(rng, n_layers=2, dim=3)
    X = rng.normal(size=(4, 3))
    y, trace = compose_unmasked(stack, from_tokens(X), X[0], return_trace=True)
    assert len(trace) == len(stack.layers) + 1
    np.testing.assert_array_equal(trace[-1], y)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), masked=st.booleans())
def test_permutation_equivariance_is_bitwise(seed, masked):
    rng = np.random.default_rng(seed)
    stack = random_stack(rng, masked=masked, max_dim=4)
    n = int(rng.integers(2, 8))
    X = rng.normal(size=(n, stack.d_in))
    perm = rng.permutation(n)
    if masked:
        mu = SpaceTimeMeasure(X, np.arange(1, n + 1) / n, np.full(n, 1 / n))
        nu = SpaceTimeMeasure(X[perm], mu.times[perm], mu.weights[perm])
        a, _ = transform_spacetime(stack, mu)
        b, _ = transform_spacetime(stack, nu)
    else:
        a, _ = transform_measure(stack, from_tokens(X))
        b, _ = transform_measure(stack, from_tokens(X[perm]))
    assert np.array_equal(a[perm], b)
