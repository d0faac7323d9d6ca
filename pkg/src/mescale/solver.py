"""Fixed-point computation of the q-scale function.

Both variation regimes reduce the scale function to

    W(x) = (exp(Phi_q x) - h e^{G x} V) / psi'(Phi_q),   x >= 0,

where ``h e^{G x} V`` is the probability of hitting ``-x`` before an
independent ``Exp(q)`` clock rings. The bounded-variation case takes
``h = Psi``, ``V = nu``; the unbounded case takes ``h = e_1`` and
``V = (1, nu)``. ``Psi`` (or the pair ``(a, b)``) comes from a linear
recursion started at zero that needs one LU factorization.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError, ModelError, SingularMatrixError
from .levy import phi_q
from .linalg import LUSolver, mat_exp

__all__ = [
    "BVSolution",
    "UVSolution",
    "DEFAULT_TOL",
    "DEFAULT_MAX_ITER",
    "wiener_hopf_rates",
    "solve_psi_bv",
    "solve_psi_uv",
    "solve",
    "scale_function",
    "scale_derivative",
    "scale_integral",
    "hitting_probability",
]

DEFAULT_TOL = 1e-14
DEFAULT_MAX_ITER = 100_000
INTEGRAL_SINGULAR_RTOL = 1e-8


class _Solution:
    """Evaluation shared by both regimes; subclasses fix ``_h``, ``G``, ``V``."""

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or not np.all(np.isfinite(x)):
            raise DomainError("x must be finite and nonnegative")
        return x

    def _map(self, x, fn):
        out = np.array([fn(xi) for xi in x.ravel()], dtype=float)
        return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)

    @property
    def phi(self):
        return self.root.phi_q

    @property
    def slope(self):
        return self.root.psi_prime_at_root

    def hitting_probability(self, x):
        """``P(tau_{-x} < e_q)``."""
        x = self._check(x)
        return self._map(x, lambda xi: self._h @ mat_exp(self.G * xi) @ self.V)

    def scale_function(self, x):
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise DomainError("x must be finite")
        pos = np.maximum(x, 0.0)
        vals = (np.exp(self.phi * pos) - self.hitting_probability(pos)) / self.slope
        return float(np.where(x < 0, 0.0, vals)) if x.ndim == 0 else np.where(x < 0, 0.0, vals)

    def scale_derivative(self, x):
        """Right derivative of ``W``; at ``x = 0`` this is ``W'(0+)``."""
        x = self._check(x)
        hG = self._h @ self.G
        return self._map(x, lambda xi: (self.phi * math.exp(self.phi * xi)
                                        - hG @ mat_exp(self.G * xi) @ self.V) / self.slope)

    def scale_integral(self, x, full_output=False):
        """``int_0^x W(y) dy`` in closed form.

        Falls back to adaptive quadrature when ``G`` is nearly singular
        relative to the jump generator, where ``G^{-1} (e^{Gx} - I)`` would
        cancel badly; with ``full_output=True`` a ``(value, used_quadrature)``
        pair is returned.
        """
        x = self._check(x)
        ref = max(np.linalg.norm(self.G, np.inf), np.linalg.norm(self.model.jump.T, np.inf))
        try:
            hGinv = LUSolver(self.G, rtol=INTEGRAL_SINGULAR_RTOL, scale=ref).solve_left(self._h)
        except SingularMatrixError:
            warnings.warn("G is singular; integrating the scale function by quadrature",
                          RuntimeWarning, stacklevel=2)
            vals = self._map(x, lambda xi: integrate.quad(
                self.scale_function, 0.0, xi, epsabs=1e-13, epsrel=1e-10, limit=200)[0])
            return (vals, True) if full_output else vals
        eye = np.eye(self.G.shape[0])

        def one(xi):
            growth = xi if self.phi == 0.0 else math.expm1(self.phi * xi) / self.phi
            return (growth - hGinv @ (mat_exp(self.G * xi) - eye) @ self.V) / self.slope

        vals = self._map(x, one)
        return (vals, False) if full_output else vals

    def laplace_transform(self, theta):
        """Closed-form ``int_0^inf e^{-theta x} W(x) dx`` for ``theta > Phi_q``."""
        if theta <= self.phi:
            raise DomainError("theta must exceed Phi_q")
        n = self.G.shape[0]
        res = self._h @ LUSolver(theta * np.eye(n) - self.G).solve(self.V)
        return float((1.0 / (theta - self.phi) - res) / self.slope)


@dataclass(frozen=True, eq=False)
class BVSolution(_Solution):
    """Converged bounded-variation data: ``Psi``, ``G = T + t Psi``, ``nu``."""

    model: object
    root: object
    Psi: np.ndarray
    G: np.ndarray
    nu: np.ndarray
    iterations: int
    residual: float

    @property
    def _h(self):
        return self.Psi

    @property
    def V(self):
        return self.nu


@dataclass(frozen=True, eq=False)
class UVSolution(_Solution):
    """Converged unbounded-variation data.

    ``G = [[-a, b], [t, T]]``, ``V = (1, nu)`` and ``Psi = (omega - a, b) / omega``.
    """

    model: object
    root: object
    a: float
    b: np.ndarray
    omega: float
    eta: float
    Psi: np.ndarray
    G: np.ndarray
    nu: np.ndarray
    V: np.ndarray
    iterations: int
    residuals: tuple

    @property
    def _h(self):
        e1 = np.zeros(self.G.shape[0])
        e1[0] = 1.0
        return e1

    @property
    def residual(self):
        return max(self.residuals)


def _nu(m, root):
    rep = m.jump
    return LUSolver(root.phi_q * np.eye(rep.p) - rep.T).solve(rep.t)


def bv_residual(m, q, Psi):
    rep = m.jump
    lhs = Psi @ ((m.lam + q) * np.eye(rep.p) - m.d * rep.T - m.d * np.outer(rep.t, Psi))
    return float(np.max(np.abs(lhs - m.lam * rep.alpha)))


def solve_psi_bv(m, q, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, callback=None):
    """Bounded-variation fixed point.

    Iterates ``Psi_n = (lam/d alpha + (Psi_{n-1} t) Psi_{n-1}) ((lam+q)/d I - T)^{-1}``
    from ``Psi_0 = 0`` until successive iterates differ by less than ``tol``
    in sup-norm. ``callback(n, Psi_n)`` is invoked after every step.
    """
    m.check_bv()
    root = phi_q(m, q)
    rep = m.jump
    lu = LUSolver((m.lam + q) / m.d * np.eye(rep.p) - rep.T)
    drive = m.lam / m.d * rep.alpha
    Psi = np.zeros(rep.p)
    step = math.inf
    for n in range(1, max_iter + 1):
        new = lu.solve_left(drive + (Psi @ rep.t) * Psi)
        step = float(np.max(np.abs(new - Psi)))
        Psi = new
        if callback is not None:
            callback(n, Psi)
        if not np.all(np.isfinite(Psi)):
            break
        if step < tol:
            G = rep.T + np.outer(rep.t, Psi)
            return BVSolution(model=m, root=root, Psi=Psi, G=G, nu=_nu(m, root),
                              iterations=n, residual=bv_residual(m, q, Psi))
    res = bv_residual(m, q, Psi) if np.all(np.isfinite(Psi)) else math.inf
    raise ConvergenceError(
        f"Psi iteration did not converge in {n} steps (last step {step:.3e}, "
        f"residual {res:.3e})", residual=res, iterations=n)


def wiener_hopf_rates(m, q):
    """Rates ``(omega, eta)`` of the drop to and the rise from the running
    minimum of ``d t + sigma B_t`` over an ``Exp(lam + q)`` horizon."""
    if m.sigma <= 0:
        raise ModelError("Wiener-Hopf rates need sigma > 0")
    s2 = m.sigma ** 2
    root = math.sqrt(m.d ** 2 + 2.0 * s2 * (m.lam + q))
    return (root + m.d) / s2, (root - m.d) / s2


def uv_residuals(m, q, a, b):
    rep = m.jump
    s2 = m.sigma ** 2
    scalar = abs(s2 * a * a - 2.0 * m.d * a - 2.0 * (m.lam + q) + s2 * (b @ rep.t))
    M = (a - 2.0 * m.d / s2) * np.eye(rep.p) - rep.T
    vector = float(np.max(np.abs(s2 * (b @ M) - 2.0 * m.lam * rep.alpha)))
    return float(scalar), vector


def solve_psi_uv(m, q, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, callback=None):
    """Unbounded-variation fixed point for the pair ``(a, b)``.

    ``b_n = (2 lam / sigma^2 alpha + (omega - a_{n-1}) b_{n-1}) (eta I - T)^{-1}``
    followed by
    ``a_n = omega - sigma^2 / (2 sqrt(d^2 + 2 sigma^2 (lam+q))) ((omega - a_{n-1})^2 + b_n t)``,
    from ``a_0 = omega``, ``b_0 = 0``. ``callback(n, a_n, b_n)`` runs each step.
    """
    if m.sigma <= 0:
        raise ModelError("unbounded-variation solver needs sigma > 0")
    root = phi_q(m, q)
    rep = m.jump
    omega, eta = wiener_hopf_rates(m, q)
    s2 = m.sigma ** 2
    shrink = s2 / (2.0 * math.sqrt(m.d ** 2 + 2.0 * s2 * (m.lam + q)))
    lu = LUSolver(eta * np.eye(rep.p) - rep.T)
    drive = 2.0 * m.lam / s2 * rep.alpha
    a, b = omega, np.zeros(rep.p)
    step = math.inf
    for n in range(1, max_iter + 1):
        b_new = lu.solve_left(drive + (omega - a) * b)
        a_new = omega - shrink * ((omega - a) ** 2 + b_new @ rep.t)
        step = max(abs(a_new - a), float(np.max(np.abs(b_new - b))))
        a, b = float(a_new), b_new
        if callback is not None:
            callback(n, a, b)
        if not (math.isfinite(a) and np.all(np.isfinite(b))):
            break
        if step < tol:
            nu = _nu(m, root)
            G = np.block([[np.array([[-a]]), b[None, :]], [rep.t[:, None], rep.T]])
            Psi = np.concatenate(([omega - a], b)) / omega
            return UVSolution(model=m, root=root, a=a, b=b, omega=omega, eta=eta,
                              Psi=Psi, G=G, nu=nu, V=np.concatenate(([1.0], nu)),
                              iterations=n, residuals=uv_residuals(m, q, a, b))
    res = max(uv_residuals(m, q, a, b)) if math.isfinite(a) else math.inf
    raise ConvergenceError(
        f"(a, b) iteration did not converge in {n} steps (last step {step:.3e}, "
        f"residual {res:.3e})", residual=res, iterations=n)


def solve(m, q, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Dispatch on the variation regime."""
    if m.bounded_variation:
        return solve_psi_bv(m, q, tol, max_iter)
    return solve_psi_uv(m, q, tol, max_iter)


def scale_function(sol, x):
    """``W^(q)(x)``; zero for ``x < 0``."""
    return sol.scale_function(x)


def scale_derivative(sol, x):
    return sol.scale_derivative(x)


def scale_integral(sol, x, full_output=False):
    return sol.scale_integral(x, full_output=full_output)


def hitting_probability(sol, x):
    return sol.hitting_probability(x)
