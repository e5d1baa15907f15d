import json

import numpy as np
import pytest

from incontext.fixtures import lip_context, random_measure, random_stack
from incontext.formats import (
    FormatError,
    dump_algebra,
    dump_config,
    dump_json,
    dump_measure,
    dump_stack,
    load_algebra,
    load_measure,
    load_stack,
    parse_config,
)
from incontext.measures import from_tokens, same_particles
from incontext.attention import transformer_tokens
from incontext.universality.algebra import AlgebraElement
from incontext.universality.realize import realize


def test_measure_round_trip_is_exact(rng):
    for mu in (random_measure(rng, 5, 3, uniform=False), lip_context(rng, 1.0, 0.3)):
        back = load_measure(dump_measure(mu))
        assert type(back) is type(mu)
        assert same_particles(back, mu, tol=0.0)


def test_measure_text_layout():
    text = dump_measure(from_tokens([[0.5], [0.25]]))
    assert text.splitlines() == ["d=1 spacetime=0", "0.5 0.5", "0.5 0.25"]


@pytest.mark.parametrize("text", ["", "d=2\n1 0\n", "d=1\n1 x\n", "d=1\n", "d=1\n0.5 0\n"])
def test_measure_errors(text):
    with pytest.raises(FormatError):
        load_measure(text)


def test_stack_round_trip_is_exact(rng):
    for masked in (False, True):
        stack = random_stack(rng, masked=masked, dim=3)
        back = load_stack(dump_stack(stack))
        X = rng.normal(size=(5, 3))
        np.testing.assert_array_equal(transformer_tokens(back, X), transformer_tokens(stack, X))
        assert dump_stack(back) == dump_stack(stack)


def test_exact_mode_stack_is_not_serialisable(rng):
    A = AlgebraElement(rng.normal(size=(1, 1, 1, 2)), [[[0.0]]], [[[1.0]]], [[[1.0]]])
    with pytest.raises(FormatError):
        dump_stack(realize(A, exact_product=True).stack)


def test_stack_errors():
    with pytest.raises(FormatError):
        load_stack("stack layers=1\nconvolution\n")
    with pytest.raises(FormatError):
        load_stack("stack layers=2\nmlp depth=0\n")


def test_algebra_round_trip_is_exact(rng):
    A = AlgebraElement(rng.normal(size=(2, 3, 2, 4)), rng.normal(size=(2, 3, 2)), rng.normal(size=(2, 3, 2)),
                       rng.normal(size=(2, 3, 2)))
    B = load_algebra(dump_algebra(A))
    for f in "abcv":
        np.testing.assert_array_equal(getattr(A, f), getattr(B, f))


def test_algebra_errors():
    with pytest.raises(FormatError, match="missing"):
        load_algebra("algebra d=1 dprime=1 T=1 N=2\n0 0 0 1 0 0 1\n")
    with pytest.raises(FormatError, match="out of range"):
        load_algebra("algebra d=1 dprime=1 T=1 N=1\n0 3 0 1 0 0 1\n")


def test_config_parse_and_dump():
    cfg = parse_config("# comment\nfit.N = 4\nseed=3  # trailing\n\nfit.N = 8\n")
    assert cfg == {"fit.N": "8", "seed": "3"}
    assert parse_config(dump_config(cfg)) == cfg
    with pytest.raises(FormatError):
        parse_config("no equals sign\n")


def test_json_handles_numpy_and_non_finite():
    out = json.loads(dump_json({"a": np.float64(1.5), "b": np.arange(3), "c": float("inf"), 1: np.bool_(True)}))
    assert out == {"a": 1.5, "b": [0, 1, 2], "c": "inf", "1": True}
