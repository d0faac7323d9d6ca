"""Spectrally negative Levy model with compound-Poisson ME jumps.

``X_t = d t + sigma B_t - sum_{j <= N_t} C_j`` with ``N`` Poisson of rate
``lam`` and ``C_j`` drawn from an ME law. Killing at rate ``q`` is passed to
each computation rather than stored on the model.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRootError, DomainError, ModelError, NumericalError
from .linalg import LUSolver, spectral_abscissa
from .medist import MERep

__all__ = [
    "LevyModel",
    "RootData",
    "laplace_exponent",
    "laplace_exponent_deriv",
    "largest_root",
    "phi_q",
    "adjustment_coefficient",
]

ROOT_TOL = 1e-12
DEGENERATE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LevyModel:
    d: float
    sigma: float
    lam: float
    jump: MERep

    def __post_init__(self):
        for name in ("d", "sigma", "lam"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ModelError(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if self.sigma < 0:
            raise ModelError("sigma must be nonnegative")
        if self.lam <= 0:
            raise ModelError("jump rate lam must be positive")
        if not isinstance(self.jump, MERep):
            raise ModelError("jump must be an MERep")
        absc = spectral_abscissa(self.jump.T)
        if absc >= 0:
            raise ModelError(f"jump matrix T is not stable (abscissa {absc:.3e})")
        object.__setattr__(self, "_abscissa", absc)

    @property
    def bounded_variation(self):
        return self.sigma == 0.0

    @property
    def jump_abscissa(self):
        return self._abscissa

    def check_bv(self):
        if not self.bounded_variation:
            raise ModelError("bounded-variation solver needs sigma == 0")
        if self.d <= 0:
            raise ModelError("bounded-variation requires positive drift")

    def resolvent_moments(self, theta):
        """``alpha (theta I - T)^{-1} t`` and ``alpha (theta I - T)^{-2} t``."""
        rep = self.jump
        A = theta * np.eye(rep.p) - rep.T
        lu = LUSolver(A)
        v = lu.solve(rep.t.astype(A.dtype))
        return rep.alpha @ v, rep.alpha @ lu.solve(v)


def _exponent(m, theta, L):
    return m.d * theta + 0.5 * m.sigma ** 2 * theta ** 2 + m.lam * (L - 1.0)


def laplace_exponent(m, theta):
    """``psi(theta) = d theta + sigma^2 theta^2 / 2 + lam (L(theta) - 1)``.

    Real ``theta`` must exceed the abscissa of ``T`` (in particular any
    ``theta >= 0`` works); complex ``theta`` is accepted for contour work.
    """
    if np.isrealobj(theta) and theta <= m.jump_abscissa:
        raise DomainError("theta must lie right of the jump-law abscissa")
    L, _ = m.resolvent_moments(theta)
    val = _exponent(m, theta, L)
    return complex(val) if np.iscomplexobj(val) else float(val)


def laplace_exponent_deriv(m, theta):
    if np.isrealobj(theta) and theta <= m.jump_abscissa:
        raise DomainError("theta must lie right of the jump-law abscissa")
    _, L2 = m.resolvent_moments(theta)
    return float(m.d + m.sigma ** 2 * theta - m.lam * L2)


@dataclass(frozen=True)
class RootData:
    q: float
    phi_q: float
    psi_prime_at_root: float


def largest_root(m, q):
    """Largest root of ``psi(theta) = q`` on ``[0, inf)``.

    An upper bracket is grown by doubling until ``psi > q``. Because ``psi`` is
    convex, Newton steps started right of the largest root decrease
    monotonically onto it; bisection guards against round-off overshoot.
    """
    q = float(q)
    if q < 0 or not math.isfinite(q):
        raise DomainError("q must be finite and nonnegative")

    def g(theta):
        return laplace_exponent(m, theta) - q

    if q == 0.0 and laplace_exponent_deriv(m, 0.0) >= 0.0:
        # convexity: psi >= 0 on [0, inf), so the origin is the largest zero
        return 0.0
    hi = 1.0
    while g(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e300:
            raise NumericalError("psi(theta) - q has no sign change on [0, inf)")
    lo = 0.0
    theta = hi
    for _ in range(1000):
        deriv = laplace_exponent_deriv(m, theta)
        nxt = theta - g(theta) / deriv if deriv > 0 else 0.5 * (lo + theta)
        if not lo < nxt <= theta:
            nxt = 0.5 * (lo + theta)
        val = g(nxt)
        if val <= 0.0:
            # round-off pushed us onto or past the root
            lo = nxt
            if abs(val) <= ROOT_TOL * max(1.0, q):
                return nxt if abs(val) < abs(g(theta)) else theta
            continue
        if theta - nxt <= 1e-15 * (1.0 + theta):
            return nxt
        theta = nxt
    raise NumericalError("root iteration did not converge")


def phi_q(m, q):
    """Root data for the killed exponent: ``Phi_q`` and ``psi'(Phi_q)``.

    Raises
    ------
    DegenerateRootError
        When ``psi'(Phi_q) <= 1e-12`` (zero-mean, unkilled case).
    """
    root = largest_root(m, q)
    slope = laplace_exponent_deriv(m, root)
    if slope <= DEGENERATE_TOL:
        raise DegenerateRootError(
            f"psi'(Phi_q) = {slope:.3e} at Phi_q = {root!r}; the representation "
            "needs a strictly positive slope")
    return RootData(q=float(q), phi_q=root, psi_prime_at_root=slope)


def adjustment_coefficient(m, q):
    """The ``R > 0`` with ``psi(-R) = q``, or ``None`` when none exists.

    ``exp(-R X_t)`` on ``{t < e_q}`` is then a martingale, which bounds the
    probability of ever descending ``u`` below the start by ``exp(-R u)``.
    """
    q = float(q)
    if q == 0.0 and laplace_exponent_deriv(m, 0.0) <= 0.0:
        return None
    edge = m.jump_abscissa * (1.0 - 1e-12)
    if laplace_exponent(m, edge) - q <= 0.0:
        return None
    hi = 0.0
    if q == 0.0:
        # step off the trivial root at the origin
        hi = 0.5 * edge
        while laplace_exponent(m, hi) >= 0.0:
            hi *= 0.5
            if hi > -1e-300:
                return None
    lo = edge
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if laplace_exponent(m, mid) - q > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * abs(lo):
            break
    return -0.5 * (lo + hi)
