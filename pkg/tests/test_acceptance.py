"""One test per acceptance criterion, each at its stated scale and tolerance."""

import pytest

from partmon.acceptance import CRITERIA, run_criterion

RESULTS = []


@pytest.mark.parametrize("number", [num for num, _, _ in CRITERIA], ids=[f"criterion_{num:02d}" for num, _, _ in CRITERIA])
def test_criterion(number):
    res = run_criterion(number)
    RESULTS.append(res)
    print(res.line())
    assert res.passed, res.detail
