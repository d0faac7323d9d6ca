import numpy as np
import pytest

from mescale.fixtures import FIXTURES, fixture
from mescale.medist import RationalLST
from mescale.solver import solve

import acceptance_log


@pytest.fixture(params=sorted(FIXTURES))
def case(request):
    """``(name, model, q, solution)`` for each reference fixture."""
    m, q = fixture(request.param)
    return request.param, m, q, solve(m, q)


def hyperexp_rational(weights, rates):
    """Rational transform of a mixture of exponentials."""
    weights = np.asarray(weights, dtype=float)
    weights = weights / weights.sum()
    den = np.poly(-np.asarray(rates, dtype=float))
    num = np.zeros(1)
    for i, (w, r) in enumerate(zip(weights, rates)):
        others = np.poly(-np.delete(np.asarray(rates, dtype=float), i))
        num = np.polyadd(num, w * r * others)
    num = np.concatenate((np.zeros(len(rates) - len(num)), num))
    return RationalLST(den=den[1:], num=num[::-1])


def pytest_terminal_summary(terminalreporter):
    lines = acceptance_log.lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
