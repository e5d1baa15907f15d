import math

import pytest

from incontext.verification import Check, run_suite, softmax_mean
from incontext.measures import from_tokens


def test_check_relations():
    assert Check("x", 0, "upper", 1e-3, 1e-2).passed
    assert not Check("x", 0, "upper", 1e-1, 1e-2).passed
    assert Check("x", 0, "lower", 1e-1, 1e-2, ">=").passed
    assert not Check("x", 0, "nan", float("nan"), 1.0).passed
    with pytest.raises(ValueError):
        Check("x", 0, "bad", 0.0, 0.0, "==").passed
    assert Check("x", 0, "upper", 0.0, 1.0).line().startswith("PASS")


def test_softmax_mean_two_points():
    mu = from_tokens([[0.0], [1.0]])
    # weights e^{x y / T} at x = 1, T = 2: (1, e^{1/2})
    e = math.exp(0.5)
    assert softmax_mean(mu, [1.0])[0] == pytest.approx(e / (1 + e))


def test_supporting_checks_pass():
    checks = run_suite(seed=1, criteria=[])
    assert all(c.id.startswith("S") for c in checks)
    assert len(checks) >= 10
    failed = [c.line() for c in checks if not c.passed]
    assert not failed, failed
