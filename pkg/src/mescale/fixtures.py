"""Reference models used by the test-suite, the acceptance run and the CLI."""

import math

from .levy import LevyModel
from .medist import MERep, RationalLST, me_from_rational

__all__ = ["oscillating_lst", "FIXTURES", "fixture"]


def oscillating_lst(freq=2.0 * math.pi):
    """Transform of the density proportional to ``e^{-x} (1 - cos(freq x))``.

    ``L(s) = (1 + w^2) / ((s + 1) ((s + 1)^2 + w^2))`` with ``w = freq``; the
    density vanishes at ``x = 2 pi k / w``, so the law is ME but not PH.
    """
    w2 = freq * freq
    return RationalLST(den=[3.0, 3.0 + w2, 1.0 + w2], num=[1.0 + w2, 0.0, 0.0])


def _exp_bv():
    return LevyModel(d=1.0, sigma=0.0, lam=1.0, jump=MERep.exponential(2.0)), 0.0


def _erlang_bv():
    return LevyModel(d=2.0, sigma=0.0, lam=1.0, jump=MERep.erlang(2, 1.0)), 0.3


def _hyperexp_uv():
    jump = MERep.hyperexponential([0.4, 0.6], [1.0, 3.0])
    return LevyModel(d=0.5, sigma=1.0, lam=1.0, jump=jump), 0.2


def _oscillating_uv():
    jump = me_from_rational(oscillating_lst())
    return LevyModel(d=1.0, sigma=1.0, lam=1.0, jump=jump), 0.2


FIXTURES = {
    "exp_bv": _exp_bv,
    "erlang_bv": _erlang_bv,
    "hyperexp_uv": _hyperexp_uv,
    "oscillating_uv": _oscillating_uv,
}


def fixture(name):
    """``(model, q)`` for a named reference case."""
    return FIXTURES[name]()
