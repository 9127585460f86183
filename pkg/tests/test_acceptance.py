"""Acceptance criteria, full suite.  One PASS/FAIL line per criterion on stdout.

Run ``pytest tests/test_acceptance.py -v -s`` to see the lines live.
"""
import pytest

from carpet_modulus.acceptance import CRITERIA, run_criterion


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    r = run_criterion(number, "full")
    with capsys.disabled():
        print("\n" + r.line())
    assert r.passed, r.line()
