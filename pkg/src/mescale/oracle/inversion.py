"""Bromwich inversion of ``1 / (psi(theta) - q)`` with Euler summation."""

import math

import numpy as np
from scipy.special import comb

from ..errors import DomainError, NumericalError
from ..levy import largest_root, laplace_exponent

__all__ = ["euler_invert", "laplace_invert_scale"]

SINGULAR_TOL = 1e-13


def euler_invert(F, t, terms=50, euler_terms=12, A=18.4):
    """Invert a Laplace transform at ``t > 0`` (Abate-Whitt EULER algorithm).

    The trapezoidal discretization of the Bromwich integral on ``Re s = A/(2t)``
    has aliasing error of order ``exp(-A)``; the alternating tail is
    accelerated by binomial averaging of the last ``euler_terms + 1`` partial
    sums.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    x = A / (2.0 * t)
    h = math.pi / t
    n_total = terms + euler_terms
    k = np.arange(n_total + 1)
    vals = np.array([F(complex(x, h * kk)) for kk in k])
    terms_re = (-1.0) ** k * vals.real
    terms_re[0] *= 0.5
    partial = np.cumsum(terms_re)[terms:]
    weights = comb(euler_terms, np.arange(euler_terms + 1)) / 2.0 ** euler_terms
    return math.exp(A / 2.0) / t * float(weights @ partial)


def laplace_invert_scale(m, q, x, terms=50, euler_terms=12, A=18.4):
    """``W^(q)(x)`` by numerically inverting ``1 / (psi(theta) - q)``.

    The transform is shifted by ``Phi_q`` so the inverted function
    ``exp(-Phi_q x) W(x)`` is bounded; the contour then sits at
    ``Re theta = Phi_q + A / (2x)``. If the contour passes within
    ``1e-13`` of a zero of ``psi - q``, ``A`` is nudged once before giving up.
    """
    if x <= 0:
        raise DomainError("x must be positive")
    phi = largest_root(m, q)

    def shifted(s):
        val = laplace_exponent(m, s + phi) - q
        if abs(val) < SINGULAR_TOL:
            raise _ContourHit
        return 1.0 / val

    for shift in (0.0, 0.37):
        try:
            g = euler_invert(shifted, x, terms, euler_terms, A + shift)
        except _ContourHit:
            continue
        return math.exp(phi * x) * g
    raise NumericalError("inversion contour meets a zero of psi(theta) - q")


class _ContourHit(Exception):
    pass
