"""Orbit-process view of the fixed point and a phase-type CTMC simulator.

An :class:`OrbitModel` describes a fluid level that rises at unit rate while
the orbit sits in the plus block and falls at unit rate in the minus block.
``C+``/``C-`` drive the orbit within a block and ``D+-``/``D-+`` jump across;
any missing row mass is termination. ``Psi`` is the expected minus-orbit at
the first return of the level to its starting point. It solves

    C+ Psi + Psi C- + D+- + Psi D-+ Psi = 0,

and the orbit recorded at successive new minima evolves by
``exp((C- + D-+ Psi) x)``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_sylvester

from ..errors import (ConvergenceError, DimensionError, DomainError, ModelError,
                      OrbitDegeneracyError, UnsupportedModelError)
from ..linalg import as_matrix, mat_exp
from ..solver import wiener_hopf_rates
from .montecarlo import McEstimate, SimConfig, run_chunks

__all__ = [
    "OrbitModel",
    "bv_embedding",
    "uv_embedding",
    "orbit_evolve",
    "orbit_jump",
    "sylvester_psi",
    "riccati_residual",
    "downward_record_expectation",
    "level_drift_bound",
    "mc_orbit_psi",
    "mc_orbit_record",
]

DEFICIT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class OrbitModel:
    Cplus: np.ndarray
    Cminus: np.ndarray
    Dpm: np.ndarray
    Dmp: np.ndarray
    initial: np.ndarray
    labels: tuple = field(default=("plus", "minus"))

    def __post_init__(self):
        Cp = as_matrix(self.Cplus, "Cplus", square=True)
        Cm = as_matrix(self.Cminus, "Cminus", square=True)
        Dpm = as_matrix(self.Dpm, "Dpm")
        Dmp = as_matrix(self.Dmp, "Dmp")
        init = np.asarray(self.initial, dtype=float).ravel()
        n_p, n_m = Cp.shape[0], Cm.shape[0]
        if Dpm.shape != (n_p, n_m) or Dmp.shape != (n_m, n_p):
            raise DimensionError(
                f"jump blocks must be {n_p}x{n_m} and {n_m}x{n_p}, got "
                f"{Dpm.shape} and {Dmp.shape}")
        if init.size != n_p:
            raise DimensionError(f"initial orbit must have length {n_p}")
        if abs(init.sum() - 1.0) > 1e-12:
            raise ModelError("initial orbit must sum to 1")
        for name, val in (("plus", self.deficit(Cp, Dpm)),
                          ("minus", self.deficit(Cm, Dmp))):
            if np.any(val < -DEFICIT_TOL):
                raise ModelError(f"{name} block has negative termination intensity "
                                 f"(min {val.min():.3e})")
        for name, val in (("Cplus", Cp), ("Cminus", Cm), ("Dpm", Dpm), ("Dmp", Dmp),
                          ("initial", init)):
            object.__setattr__(self, name, val)

    @staticmethod
    def deficit(C, D):
        return -(C.sum(axis=1) + D.sum(axis=1))

    @property
    def n_plus(self):
        return self.Cplus.shape[0]

    @property
    def n_minus(self):
        return self.Cminus.shape[0]

    def generator(self):
        """Full subgenerator on plus-then-minus phases."""
        return np.block([[self.Cplus, self.Dpm], [self.Dmp, self.Cminus]])

    def is_phase_type(self, tol=1e-12):
        Q = self.generator()
        off = Q - np.diag(np.diag(Q))
        return bool(np.all(off >= -tol) and np.all(np.diag(Q) < 0)
                    and np.all(self.initial >= -tol))


def bv_embedding(m, q):
    """Fluid embedding of a bounded-variation model (level in units of ``X``)."""
    m.check_bv()
    rep = m.jump
    return OrbitModel(
        Cplus=np.array([[-(m.lam + q) / m.d]]),
        Cminus=rep.T,
        Dpm=(m.lam / m.d) * rep.alpha[None, :],
        Dmp=rep.t[:, None],
        initial=np.ones(1),
        labels=("rise", "jump"),
    )


def uv_embedding(m, q):
    """Fluid embedding with a Brownian stage.

    The minus block is ``(drop, jump phases)``: the drop to the stage minimum
    runs at rate ``omega``; the plus block is the rise at rate ``eta`` that
    ends in a jump with probability ``lam / (lam + q)``.
    """
    if m.sigma <= 0:
        raise ModelError("unbounded-variation embedding needs sigma > 0")
    rep = m.jump
    omega, eta = wiener_hopf_rates(m, q)
    p = rep.p
    Cm = np.zeros((p + 1, p + 1))
    Cm[0, 0] = -omega
    Cm[1:, 0] = rep.t
    Cm[1:, 1:] = rep.T
    Dpm = np.zeros((1, p + 1))
    Dpm[0, 1:] = eta * m.lam / (m.lam + q) * rep.alpha
    Dmp = np.zeros((p + 1, 1))
    Dmp[0, 0] = omega
    return OrbitModel(Cplus=np.array([[-eta]]), Cminus=Cm, Dpm=Dpm, Dmp=Dmp,
                      initial=np.ones(1), labels=("rise", "drop+jump"))


def orbit_evolve(a, C, r):
    """Normalized flow ``a e^{C r} / (a e^{C r} 1)``."""
    if r < 0:
        raise DomainError("r must be nonnegative")
    v = np.asarray(a, dtype=float) @ mat_exp(np.asarray(C, dtype=float) * r)
    den = v.sum()
    if abs(den) <= 1e-300:
        raise OrbitDegeneracyError("orbit normalization vanished")
    return v / den


def orbit_jump(a, D):
    """Post-jump orbit ``a D / (a D 1)``."""
    v = np.asarray(a, dtype=float) @ np.asarray(D, dtype=float)
    den = v.sum()
    if abs(den) < 1e-13:
        raise OrbitDegeneracyError("jump is undefined: a D 1 vanishes")
    return v / den


def riccati_residual(om, Psi):
    R = om.Dpm + om.Cplus @ Psi + Psi @ om.Cminus + Psi @ om.Dmp @ Psi
    return float(np.max(np.abs(R)))


def sylvester_psi(om, tol=1e-14, max_iter=10_000):
    """``Psi`` by the Sylvester recursion
    ``C+ Psi_n + Psi_n C- = -D+- - Psi_{n-1} D-+ Psi_{n-1}`` from zero.

    Returns ``(Psi, iterations)``.
    """
    Psi = np.zeros((om.n_plus, om.n_minus))
    for n in range(1, max_iter + 1):
        new = solve_sylvester(om.Cplus, om.Cminus, -om.Dpm - Psi @ om.Dmp @ Psi)
        step = float(np.max(np.abs(new - Psi)))
        Psi = new
        if not np.all(np.isfinite(Psi)):
            break
        if step < tol:
            return Psi, n
    raise ConvergenceError("Sylvester recursion did not converge",
                           residual=riccati_residual(om, Psi), iterations=n)


def downward_record_expectation(beta, om, Psi, x, start="minus"):
    """Expected minus-orbit at the first passage ``x`` below the start.

    ``start="minus"`` takes ``beta`` in the minus block; ``start="plus"``
    takes it in the plus block and first maps it through ``Psi``.
    """
    if x < 0:
        raise DomainError("x must be nonnegative")
    beta = np.asarray(beta, dtype=float)
    Psi = np.atleast_2d(np.asarray(Psi, dtype=float))
    if start == "plus":
        beta = beta @ Psi
    elif start != "minus":
        raise DomainError("start must be 'minus' or 'plus'")
    if beta.size != om.n_minus:
        raise DimensionError("beta does not match the minus block")
    return beta @ mat_exp((om.Cminus + om.Dmp @ Psi) * x)


def level_drift_bound(om):
    """Rate ``r > 0`` with ``P(level ever drops by u) <= K e^{-r u}``, or None.

    ``r`` is the positive zero of the Perron root of the tilted generator
    ``[[C+ - r I, D+-], [D-+, C- + r I]]``; its eigenvector ``h`` makes
    ``e^{-r L} h`` a supermartingale and ``K = max h / min h``.
    Returns ``(r, K)`` or None when the level falls surely.
    """
    n_p, n_m = om.n_plus, om.n_minus
    Q = om.generator()
    tilt = np.concatenate((-np.ones(n_p), np.ones(n_m)))

    def perron(r):
        w, v = np.linalg.eig(Q + r * np.diag(tilt))
        k = int(np.argmax(w.real))
        return w[k].real, np.abs(v[:, k].real)

    lo = 0.0
    if perron(0.0)[0] > -1e-12:
        lo = 1e-6
        if perron(lo)[0] >= 0.0:
            return None
    hi = 1.0
    while perron(hi)[0] < 0.0:
        hi *= 2.0
        if hi > 1e12:
            return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if perron(mid)[0] < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * hi:
            break
    # lo keeps the Perron root negative: a supermartingale
    _, h = perron(lo)
    if np.min(h) <= 0:
        return None
    return lo, float(np.max(h) / np.min(h))


def _check_ph(om):
    if not om.is_phase_type():
        raise UnsupportedModelError(
            "orbit simulation needs phase-type blocks (nonnegative rates)")


def _transition_table(om):
    Q = om.generator()
    out = -np.diag(Q).copy()
    P = np.where(np.eye(Q.shape[0], dtype=bool), 0.0, np.maximum(Q, 0.0)) / out[:, None]
    kill = np.maximum(1.0 - P.sum(axis=1), 0.0)
    cum = np.cumsum(np.column_stack((P, kill)), axis=1)
    cum[:, -1] = 1.0
    return out, cum


def _simulate(om, start_phase_probs, start_in_minus, target, cfg, cap_eps=1e-12):
    """Phase indicator at the first time the level is at or below ``-target``."""
    _check_ph(om)
    n_p, n_m = om.n_plus, om.n_minus
    rates, cum = _transition_table(om)
    start_cum = np.cumsum(start_phase_probs)
    start_cum[-1] = 1.0
    offset = n_p if start_in_minus else 0
    bound = level_drift_bound(om)
    cap = None
    if bound is not None:
        r, K = bound
        cap = max(0.0, math.log(K / cap_eps) / r - target)
    dead = n_p + n_m

    def chunk(rng, size):
        phase = np.searchsorted(start_cum, rng.random(size), side="right") + offset
        level = np.zeros(size)
        hits = np.zeros((n_m, size))
        idx = np.arange(size)
        capped = 0
        for _ in range(cfg.max_stages):
            if idx.size == 0:
                break
            ph = phase[idx]
            lvl = level[idx]
            hold = rng.exponential(1.0, idx.size) / rates[ph]
            down = ph >= n_p
            lvl = lvl + np.where(down, -hold, hold)
            hit = down & (lvl <= -target)
            hits[ph[hit] - n_p, idx[hit]] = 1.0
            u = rng.random(idx.size)
            nxt = (cum[ph] < u[:, None]).sum(axis=1)
            keep = ~hit & (nxt != dead)
            if cap is not None:
                high = lvl > cap
                capped += int(np.count_nonzero(high & keep))
                keep &= ~high
            phase[idx] = nxt
            level[idx] = lvl
            idx = idx[keep]
        return hits.sum(axis=1), int(idx.size), capped

    parts = run_chunks(chunk, cfg)
    s = sum(p[0] for p in parts)
    trunc = sum(p[1] for p in parts)
    capped = sum(p[2] for p in parts)
    n = cfg.n_paths
    mean = s / n
    # indicators: sum of squares equals sum
    var = np.maximum(mean - mean ** 2, 0.0) * n / max(n - 1, 1)
    stderr = np.sqrt(var / n)
    bias = (trunc + capped * cap_eps) / n
    return [McEstimate(float(mu), float(se), n, trunc, bias) for mu, se in zip(mean, stderr)]


def mc_orbit_psi(om, cfg=SimConfig()):
    """Per-coordinate estimates of ``initial @ Psi`` from the phase-type CTMC."""
    return _simulate(om, om.initial, False, 0.0, cfg)


def mc_orbit_record(om, x, cfg=SimConfig(), beta=None):
    """Estimates of the expected minus-phase indicator at first passage of ``-x``.

    Starts from ``beta`` in the minus block when given, else from the initial
    plus orbit.
    """
    if x < 0:
        raise DomainError("x must be nonnegative")
    if beta is None:
        return _simulate(om, om.initial, False, x, cfg)
    beta = np.asarray(beta, dtype=float)
    if beta.size != om.n_minus or np.any(beta < 0):
        raise DomainError("beta must be a probability vector on the minus block")
    return _simulate(om, beta, True, x, cfg)
