"""Acceptance criteria 1-14, each at its stated tolerance.

Run ``pytest tests/test_acceptance.py -s`` to see one PASS/FAIL line per criterion.
"""

import pytest

from incontext.verification import ACCEPTANCE, run_criterion

SEED = 1


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(ACCEPTANCE))
def test_criterion(number):
    checks = run_criterion(number, SEED)
    ok = all(c.passed for c in checks)
    detail = "; ".join(f"{c.id} {c.residual:.3e} {c.relation} {c.threshold:.1e}" for c in checks)
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}")
    assert ok, "\n".join(c.line() for c in checks if not c.passed)
