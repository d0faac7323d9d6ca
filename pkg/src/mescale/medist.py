"""Matrix-exponential jump laws.

A jump law enters either through the coefficients of its rational
Laplace-Stieltjes transform (:class:`RationalLST`) or directly as a
standardized triple ``(alpha, T, t)`` with ``alpha @ 1 == 1`` and
``t == -T @ 1`` (:class:`MERep`). The bridge between the two is the companion
matrix followed by a fixed similarity transform.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (DimensionError, DomainError, InvalidTransformError,
                     NumericalError)
from .linalg import LUSolver, as_matrix, mat_exp, spectral_abscissa

__all__ = [
    "RationalLST",
    "CompanionRep",
    "MERep",
    "ValidationReport",
    "MESampler",
    "companion_from_rational",
    "standardize",
    "me_from_rational",
    "me_density",
    "me_survival",
    "me_lst",
    "me_mean",
    "validate",
    "me_sample",
]

NORMALIZATION_TOL = 1e-12
RESULTANT_TOL = 1e-10


def _resultant(den, num):
    """Resultant of a monic denominator and a numerator, scale-normalized.

    Both polynomials are given highest degree first. The numerator is scaled
    to unit max-abs coefficient; the product of its values at the roots of the
    denominator is then the resultant up to sign.
    """
    num = np.trim_zeros(np.asarray(num, dtype=float), "f")
    if num.size == 0:
        return 0.0
    num = num / np.max(np.abs(num))
    if num.size == 1:
        return float(abs(num[0])) ** (len(den) - 1)
    roots = np.roots(den)
    return float(abs(np.prod(np.polyval(num, roots))))


@dataclass(frozen=True, eq=False)
class RationalLST:
    """Coefficients of ``(b1 + b2 s + ... + bp s^(p-1)) / (s^p + a1 s^(p-1) + ... + ap)``.

    Parameters
    ----------
    den : sequence of float
        ``(a1, ..., ap)``.
    num : sequence of float
        ``(b1, ..., bp)``; ``b1`` must equal ``ap`` so that ``L(0) = 1``.
    """

    den: np.ndarray
    num: np.ndarray

    def __post_init__(self):
        den = np.atleast_1d(np.asarray(self.den, dtype=float))
        num = np.atleast_1d(np.asarray(self.num, dtype=float))
        if den.ndim != 1 or den.size < 1:
            raise InvalidTransformError("denominator needs at least one coefficient")
        if num.shape != den.shape:
            raise InvalidTransformError(
                f"numerator has {num.size} coefficients, denominator has {den.size}")
        if not (np.all(np.isfinite(den)) and np.all(np.isfinite(num))):
            raise InvalidTransformError("coefficients must be finite")
        a_p = den[-1]
        if a_p == 0.0:
            raise InvalidTransformError("a_p == 0: the transform has a pole at the origin")
        if abs(num[0] - a_p) > NORMALIZATION_TOL * max(1.0, abs(a_p)):
            raise InvalidTransformError(
                f"b1 = {num[0]!r} differs from a_p = {a_p!r}; L(0) must equal 1")
        res = _resultant(self.den_poly_of(den), num[::-1])
        if res <= RESULTANT_TOL:
            raise InvalidTransformError(
                f"numerator and denominator share a factor (resultant {res:.3e})")
        object.__setattr__(self, "den", den)
        object.__setattr__(self, "num", num)

    @staticmethod
    def den_poly_of(den):
        return np.concatenate(([1.0], den))

    @property
    def p(self):
        return self.den.size

    def denominator(self, theta):
        return np.polyval(self.den_poly_of(self.den), theta)

    def numerator(self, theta):
        return np.polyval(self.num[::-1], theta)

    def __call__(self, theta):
        """Evaluate the transform (real or complex ``theta``)."""
        return self.numerator(theta) / self.denominator(theta)


@dataclass(frozen=True, eq=False)
class CompanionRep:
    beta: np.ndarray
    S: np.ndarray
    s: np.ndarray


def companion_from_rational(R):
    """Companion-matrix representation ``(beta, S, s)`` of a rational transform."""
    p = R.p
    S = np.zeros((p, p))
    S[np.arange(p - 1), np.arange(1, p)] = 1.0
    S[-1, :] = -R.den[::-1]
    s = np.zeros(p)
    s[-1] = 1.0
    return CompanionRep(beta=R.num.copy(), S=S, s=s)


@dataclass(frozen=True, eq=False)
class MERep:
    """Standardized matrix-exponential triple.

    ``t`` defaults to ``-T @ 1``. Construction checks shapes and the two
    normalizations; stability and density sign are left to :func:`validate`.
    """

    alpha: np.ndarray
    T: np.ndarray
    t: np.ndarray = field(default=None)

    def __post_init__(self):
        T = as_matrix(self.T, "T", square=True).astype(float)
        alpha = np.asarray(self.alpha, dtype=float).ravel()
        p = T.shape[0]
        if alpha.size != p:
            raise DimensionError(f"alpha has {alpha.size} entries, T is {p}x{p}")
        closing = -T.sum(axis=1)
        t = closing if self.t is None else np.asarray(self.t, dtype=float).ravel()
        if t.size != p:
            raise DimensionError(f"t has {t.size} entries, T is {p}x{p}")
        if abs(alpha.sum() - 1.0) > NORMALIZATION_TOL * max(1.0, np.abs(alpha).sum()):
            raise InvalidTransformError(f"alpha sums to {alpha.sum()!r}, expected 1")
        scale = max(1.0, np.abs(T).max())
        if np.max(np.abs(t - closing)) > NORMALIZATION_TOL * scale:
            raise InvalidTransformError("t must equal -T @ 1")
        for name, val in (("alpha", alpha), ("T", T), ("t", t)):
            object.__setattr__(self, name, val)

    @property
    def p(self):
        return self.T.shape[0]

    def is_phase_type(self):
        """True when the triple reads as an absorbing Markov chain."""
        off = self.T - np.diag(np.diag(self.T))
        return bool(np.all(self.alpha >= 0) and np.all(off >= 0)
                    and np.all(self.t >= -NORMALIZATION_TOL))

    @classmethod
    def exponential(cls, rate):
        return cls([1.0], [[-float(rate)]])

    @classmethod
    def erlang(cls, k, rate):
        T = -rate * np.eye(k) + rate * np.eye(k, k=1)
        alpha = np.zeros(k)
        alpha[0] = 1.0
        return cls(alpha, T)

    @classmethod
    def hyperexponential(cls, weights, rates):
        return cls(np.asarray(weights, float), -np.diag(np.asarray(rates, float)))

    def __repr__(self):
        return f"MERep(alpha={self.alpha.tolist()}, T={self.T.tolist()})"


def standardize(C):
    """Map a companion representation to the standardized ``(alpha, T, t)``.

    Uses the lower-bidiagonal similarity ``M`` with ``M[0, 0] = 1/a_p``, ones
    on the rest of the diagonal and ``-1`` on the subdiagonal, which satisfies
    ``M @ 1 == -S^{-1} s``.
    """
    p = C.S.shape[0]
    a_p = -C.S[-1, 0]
    M = np.eye(p) - np.eye(p, k=-1)
    M[0, 0] = 1.0 / a_p
    # M^{-1}: first column a_p, unit lower-triangular ones below
    Minv = np.tril(np.ones((p, p)))
    Minv[:, 0] = a_p
    alpha = C.beta @ M
    T = Minv @ C.S @ M
    t = Minv @ C.s
    return MERep(alpha, T, t)


def me_from_rational(R):
    return standardize(companion_from_rational(R))


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise DomainError("x must be finite and nonnegative")
    return x


def _row_exp_apply(rep, x, vec):
    x = _check_x(x)
    out = np.array([rep.alpha @ mat_exp(rep.T * xi) @ vec for xi in x.ravel()])
    return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)


def me_density(rep, x):
    """``alpha e^{T x} t`` (scalar or elementwise over an array)."""
    return _row_exp_apply(rep, x, rep.t)


def me_survival(rep, x):
    """``alpha e^{T x} 1``."""
    return _row_exp_apply(rep, x, np.ones(rep.p))


def me_lst(rep, theta):
    """Laplace-Stieltjes transform ``alpha (theta I - T)^{-1} t``.

    Complex ``theta`` is accepted so the transform can be continued along a
    Bromwich contour.
    """
    if np.isrealobj(theta) and theta < 0:
        raise DomainError("real theta must be nonnegative")
    A = theta * np.eye(rep.p) - rep.T
    val = rep.alpha @ LUSolver(A).solve(rep.t.astype(A.dtype))
    return complex(val) if np.iscomplexobj(val) else float(val)


def me_mean(rep):
    return float(rep.alpha @ LUSolver(-rep.T).solve(np.ones(rep.p)))


@dataclass(frozen=True)
class ValidationReport:
    alpha_sum_deviation: float
    closure_deviation: float
    abscissa: float
    min_density: float
    mass_deficit: float
    grid_max: float
    grid_points: int

    @property
    def stable(self):
        return self.abscissa < 0

    @property
    def ok(self):
        return (self.stable and self.min_density >= -1e-9
                and self.alpha_sum_deviation <= NORMALIZATION_TOL
                and self.closure_deviation <= NORMALIZATION_TOL * 10)


def validate(rep, grid_max=None, grid_points=2048):
    """Numerical diagnostics for a representation.

    With ``grid_max=None`` the grid spans ``[0, 40/|abscissa|]``. An unstable
    ``T`` is reported without evaluating the (divergent) density.
    """
    absc = spectral_abscissa(rep.T)
    alpha_dev = abs(rep.alpha.sum() - 1.0)
    closure_dev = float(np.max(np.abs(rep.t + rep.T.sum(axis=1))))
    if grid_max is None:
        grid_max = 40.0 / abs(absc) if absc < 0 else 1.0
    if grid_max <= 0:
        raise DomainError("grid_max must be positive")
    if absc >= 0:
        return ValidationReport(alpha_dev, closure_dev, absc, float("nan"),
                                float("nan"), grid_max, grid_points)
    xs = np.linspace(0.0, grid_max, grid_points)
    h = xs[1] - xs[0] if grid_points > 1 else grid_max
    step = mat_exp(rep.T * h)
    row = rep.alpha.copy()
    dens = np.empty(grid_points)
    for i in range(grid_points):
        dens[i] = row @ rep.t
        row = row @ step
    deficit = float(me_survival(rep, grid_max))
    return ValidationReport(alpha_dev, closure_dev, absc, float(dens.min()),
                            deficit, float(grid_max), grid_points)


def me_sample(rep, u, max_iter=200):
    """Invert the survival function: the ``x`` with ``survival(x) == u``.

    Brackets by doubling, then runs Newton steps safeguarded by bisection.
    """
    u = float(u)
    if not 0.0 < u < 1.0:
        raise DomainError("u must lie in (0, 1)")
    ones = np.ones(rep.p)

    def surv_dens(x):
        row = rep.alpha @ mat_exp(rep.T * x)
        return row @ ones, row @ rep.t

    lo, hi = 0.0, 1.0 / max(1e-300, np.abs(rep.T).max())
    while surv_dens(hi)[0] > u:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            raise NumericalError("could not bracket the survival quantile")
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        S, f = surv_dens(x)
        g = S - u
        if abs(g) <= 1e-13 * max(u, 1e-3):
            return x
        if g > 0:
            lo = x
        else:
            hi = x
        x_new = x + g / f if f > 0 else 0.5 * (lo + hi)
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * (1.0 + x):
            return x_new
        x = x_new
    raise NumericalError(f"survival inversion did not converge in {max_iter} iterations")


class MESampler:
    """Vectorized inverse-survival sampler.

    The survival function is tabulated at anchors ``x_k = k h`` as row vectors
    ``alpha e^{T x_k}``; between anchors it is the exact Taylor polynomial
    ``sum_j (alpha e^{T x_k} T^j 1 / j!) r^j`` with ``h ||T|| <= 1/32`` so the
    truncation is below round-off. Quantiles are found by bracketing on the
    table, a quadratic first guess and a bisection-safeguarded Newton
    iteration on the polynomial.
    """

    TAYLOR_TERMS = 10

    def __init__(self, rep, tail=1e-18, max_anchors=1_000_000):
        self.rep = rep
        norm = max(np.linalg.norm(rep.T, np.inf), 1e-12)
        self.h = 0.03125 / norm
        p = rep.p
        V = np.empty((p, self.TAYLOR_TERMS))
        v = np.ones(p)
        for j in range(self.TAYLOR_TERMS):
            V[:, j] = v
            v = rep.T @ v / (j + 1)
        step = mat_exp(rep.T * self.h)
        rows = [rep.alpha.copy()]
        while rows[-1].sum() > tail:
            if len(rows) >= max_anchors:
                raise NumericalError("survival tail does not decay; is T stable?")
            k = len(rows)
            # refresh periodically to stop error build-up in the product
            nxt = rep.alpha @ mat_exp(rep.T * (k * self.h)) if k % 64 == 0 else rows[-1] @ step
            rows.append(nxt)
        self.coef = np.asarray(rows) @ V
        # column-major copy so gathered Taylor rows are contiguous
        self._coef_t = np.ascontiguousarray(self.coef.T)
        surv = self.coef[:, 0]
        # monotone envelope for bracketing; Newton works on exact values
        self._neg_env = -np.minimum.accumulate(surv)

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        k = np.minimum((x / self.h).astype(np.int64), len(self.coef) - 1)
        return self._poly(k, x - k * self.h)[0]

    def _poly(self, k, r):
        c = self._coef_t[:, k]
        J = self.TAYLOR_TERMS
        val = c[J - 1].copy()
        der = np.zeros_like(val)
        for j in range(J - 2, -1, -1):
            der *= r
            der += val
            val *= r
            val += c[j]
        return val, der

    def __call__(self, u, max_iter=200):
        """Map uniforms ``u`` in ``(0, 1]`` to jump sizes."""
        u = np.asarray(u, dtype=float)
        idx = np.searchsorted(self._neg_env, -u, side="left")
        out = np.zeros_like(u)
        live = idx > 0
        if np.any(idx >= len(self.coef)):
            raise NumericalError("uniform below tabulated tail; increase the tail depth")
        k = idx[live] - 1
        uu = u[live]
        lo = np.zeros_like(uu)
        hi = np.full_like(uu, self.h)
        c0, c1, c2 = self.coef[k, 0], self.coef[k, 1], self.coef[k, 2]
        s1 = self.coef[k + 1, 0]
        r = self.h * np.clip((c0 - uu) / np.where(c0 > s1, c0 - s1, 1.0), 0.0, 1.0)
        # root of the quadratic Taylor part; stable form, falls back to linear
        gap = c0 - uu
        with np.errstate(invalid="ignore", divide="ignore"):
            quad = -2.0 * gap / (c1 - np.sqrt(c1 * c1 - 4.0 * c2 * gap))
        ok = np.isfinite(quad) & (quad >= 0.0) & (quad <= self.h)
        r = np.where(ok, quad, r)
        todo = np.arange(uu.size)
        for _ in range(max_iter):
            if todo.size == 0:
                break
            kk, rr, ut = k[todo], r[todo], uu[todo]
            S, dS = self._poly(kk, rr)
            g = S - ut
            done = np.abs(g) <= 1e-13 * np.maximum(ut, 1e-3)
            pos = g > 0
            lo[todo] = np.where(pos, rr, lo[todo])
            hi[todo] = np.where(pos, hi[todo], rr)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = rr - g / dS
            bad = ~((newton > lo[todo]) & (newton < hi[todo])) | ~np.isfinite(newton)
            nxt = np.where(bad, 0.5 * (lo[todo] + hi[todo]), newton)
            small = np.abs(nxt - rr) <= 1e-15 * (1.0 + k[todo] * self.h + rr)
            r[todo] = np.where(done, rr, nxt)
            todo = todo[~(done | small)]
        else:
            if todo.size:
                raise NumericalError("vectorized survival inversion did not converge")
        out[live] = k * self.h + r
        return out

    def sample(self, rng, size):
        # 1 - U lies in (0, 1]
        return self(1.0 - rng.random(size))
