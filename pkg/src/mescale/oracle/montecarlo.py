"""Exact stage-wise Monte Carlo for ``P(tau_{-x} < e_q)``.

Paths are simulated stage by stage without time discretization. A stage is
the stretch between Poisson jumps (or killing):

* ``sigma > 0``: drop to the stage minimum ``~ Exp(omega)``, rise from it
  ``~ Exp(eta)`` (independent Wiener-Hopf factors over an ``Exp(lam + q)``
  horizon), then kill with probability ``q / (lam + q)`` or jump;
* ``sigma == 0``: rise ``d Exp(lam + q)``, then kill or jump.

On the first passage below ``-x`` the path scores ``exp(-Phi_q Z)`` with ``Z``
the overshoot (zero when the passage happens during a drop).
"""

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DomainError, ModelError
from ..levy import adjustment_coefficient, largest_root
from ..medist import MESampler
from ..solver import wiener_hopf_rates

__all__ = [
    "SimConfig",
    "McEstimate",
    "make_rng",
    "thread_count",
    "run_chunks",
    "mc_hitting_probability",
    "mc_hitting_probabilities",
]


@dataclass(frozen=True)
class SimConfig:
    seed: int = 20240601
    n_paths: int = 1_000_000
    max_stages: int = 1_000_000
    stream_id: int = 0
    # paths climbing above this level are retired as non-hitting (None: automatic)
    level_cap: Optional[float] = None
    chunk_size: int = 1 << 17

    def __post_init__(self):
        if self.n_paths < 1:
            raise DomainError("n_paths must be at least 1")
        if self.max_stages < 1:
            raise DomainError("max_stages must be at least 1")
        if self.chunk_size < 1:
            raise DomainError("chunk_size must be at least 1")

    def chunks(self):
        full, rest = divmod(self.n_paths, self.chunk_size)
        return [self.chunk_size] * full + ([rest] if rest else [])


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with standard error ``std / sqrt(n)``.

    ``truncated`` counts paths cut off by ``max_stages``; ``bias_bound``
    bounds the total bias introduced by retiring paths early.
    """

    mean: float
    stderr: float
    n: int
    truncated: int = 0
    bias_bound: float = 0.0

    def within(self, value, k=3.0):
        return abs(self.mean - value) <= k * self.stderr + self.bias_bound


def make_rng(seed, stream_id, chunk):
    """Counter-based generator keyed by ``(seed, stream_id, chunk)``."""
    ss = np.random.SeedSequence(seed, spawn_key=(stream_id, chunk))
    return np.random.Generator(np.random.Philox(ss))


def thread_count():
    env = os.environ.get("SCALEFN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def run_chunks(fn, cfg):
    """Run ``fn(rng, size)`` over the fixed chunk partition of ``cfg``.

    Results come back in chunk order, so reductions over them are
    reproducible whatever the thread count.
    """
    sizes = cfg.chunks()
    jobs = [(make_rng(cfg.seed, cfg.stream_id, j), size) for j, size in enumerate(sizes)]
    workers = min(thread_count(), len(jobs))
    if workers <= 1:
        return [fn(rng, size) for rng, size in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def _stage_loop(m, q, xs, phi, sampler, cap, max_stages, rng, n):
    """Simulate ``n`` paths; returns (per-level scores, #truncated, #capped)."""
    k = xs.size
    score = np.zeros((k, n))
    passed = np.zeros((k, n), dtype=bool)
    level = np.zeros(n)
    idx = np.arange(n)
    total = m.lam + q
    kill_p = q / total
    if m.sigma > 0:
        omega, eta = wiener_hopf_rates(m, q)
    capped = 0
    for _ in range(max_stages):
        if idx.size == 0:
            break
        lvl = level[idx]
        if m.sigma > 0:
            lvl = lvl - rng.exponential(1.0 / omega, idx.size)
            for j in range(k):
                hit = ~passed[j, idx] & (lvl <= -xs[j])
                passed[j, idx[hit]] = True
                score[j, idx[hit]] = 1.0
            lvl = lvl + rng.exponential(1.0 / eta, idx.size)
        else:
            lvl = lvl + m.d * rng.exponential(1.0 / total, idx.size)
        alive = rng.random(idx.size) >= kill_p
        idx, lvl = idx[alive], lvl[alive]
        lvl = lvl - sampler.sample(rng, idx.size)
        for j in range(k):
            hit = ~passed[j, idx] & (lvl < -xs[j])
            passed[j, idx[hit]] = True
            score[j, idx[hit]] = np.exp(-phi * (-xs[j] - lvl[hit]))
        level[idx] = lvl
        keep = ~passed[-1, idx]
        if cap is not None:
            high = lvl > cap
            capped += int(np.count_nonzero(high & keep))
            keep &= ~high
        idx = idx[keep]
    return score, int(idx.size), capped


def mc_hitting_probabilities(m, q, xs, cfg=SimConfig(), cap_eps=1e-12):
    """Monte Carlo estimates of ``P(tau_{-x} < e_q)`` for several levels at once.

    Paths that climb to a level ``L`` from which descending below ``-x`` has
    probability at most ``cap_eps`` (by the exponential martingale bound) are
    retired; this and the stage limit are reported in ``bias_bound``.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(xs < 0):
        raise DomainError("levels x must be nonnegative")
    if m.sigma == 0 and m.d <= 0:
        raise ModelError("bounded-variation requires positive drift")
    order = np.argsort(xs)
    xs_sorted = xs[order]
    phi = largest_root(m, q)
    cap = cfg.level_cap
    if cap is None:
        R = adjustment_coefficient(m, q)
        if R is not None:
            cap = max(0.0, math.log(1.0 / cap_eps) / R - xs_sorted[0])
    eps = cap_eps if cfg.level_cap is None else math.nan
    sampler = MESampler(m.jump)

    def chunk(rng, size):
        score, trunc, capped = _stage_loop(m, q, xs_sorted, phi, sampler, cap,
                                           cfg.max_stages, rng, size)
        return score.sum(axis=1), (score ** 2).sum(axis=1), trunc, capped

    parts = run_chunks(chunk, cfg)
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    trunc = sum(p[2] for p in parts)
    capped = sum(p[3] for p in parts)
    n = cfg.n_paths
    mean = s1 / n
    var = np.maximum(s2 / n - mean ** 2, 0.0) * n / max(n - 1, 1)
    stderr = np.sqrt(var / n)
    bias = (trunc + capped * (eps if cap is not None else 0.0)) / n
    if trunc:
        warnings.warn(f"{trunc} of {n} paths hit max_stages={cfg.max_stages}; "
                      f"bias up to {trunc / n:.2e}", RuntimeWarning, stacklevel=2)
    out = [None] * xs.size
    for pos, j in enumerate(order):
        out[j] = McEstimate(float(mean[pos]), float(stderr[pos]), n, trunc, float(bias))
    return out


def mc_hitting_probability(m, q, x, cfg=SimConfig()):
    """Single-level version of :func:`mc_hitting_probabilities`."""
    return mc_hitting_probabilities(m, q, [x], cfg)[0]
