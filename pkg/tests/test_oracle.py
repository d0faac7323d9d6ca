import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from mescale.errors import (DomainError, ModelError, NumericalError, OrbitDegeneracyError,
                            UnsupportedModelError)
from mescale.fixtures import FIXTURES, fixture
from mescale.levy import LevyModel
from mescale.medist import MERep
from mescale.oracle import inversion
from mescale.oracle.inversion import euler_invert, laplace_invert_scale
from mescale.oracle.montecarlo import SimConfig, mc_hitting_probabilities, mc_hitting_probability
from mescale.oracle.orbit import (OrbitModel, bv_embedding, downward_record_expectation,
                                  level_drift_bound, mc_orbit_psi, mc_orbit_record,
                                  orbit_evolve, orbit_jump, riccati_residual,
                                  sylvester_psi, uv_embedding)
from mescale.solver import solve

E1 = math.exp(-1.0)


def embedding(m, q):
    return bv_embedding(m, q) if m.bounded_variation else uv_embedding(m, q)


# Laplace inversion

def test_euler_invert_exponential():
    for t in (0.1, 1.0, 4.0):
        assert euler_invert(lambda s: 1.0 / (s + 1.0), t) == pytest.approx(math.exp(-t), rel=1e-8)


def test_inversion_exp_fixture():
    m, q = fixture("exp_bv")
    assert laplace_invert_scale(m, q, 1.0) == pytest.approx(2.0 - E1, abs=1e-7)
    assert laplace_invert_scale(m, q, 1e-3) == pytest.approx(1.0, abs=1e-3)


def test_inversion_uv_exponential_model():
    m = LevyModel(d=0.0, sigma=1.0, lam=1.0, jump=MERep.exponential(1.0))
    sol = solve(m, 0.5)
    for x in (0.5, 1.0, 2.0):
        assert laplace_invert_scale(m, 0.5, x) == pytest.approx(sol.scale_function(x), rel=1e-6)


def test_inversion_domain_and_contour(monkeypatch):
    m, q = fixture("exp_bv")
    with pytest.raises(DomainError):
        laplace_invert_scale(m, q, 0.0)
    monkeypatch.setattr(inversion, "laplace_exponent", lambda m, s: q)
    with pytest.raises(NumericalError):
        laplace_invert_scale(m, q, 1.0)


# stage-wise Monte Carlo

def test_mc_exp_fixture():
    m, q = fixture("exp_bv")
    est = mc_hitting_probability(m, q, 1.0, SimConfig(seed=11, n_paths=200_000))
    assert abs(est.mean - 0.5 * E1) <= 3 * est.stderr + est.bias_bound
    assert est.truncated == 0 and est.bias_bound < 1e-9


def test_mc_zero_level_with_brownian_part():
    m, q = fixture("hyperexp_uv")
    est = mc_hitting_probability(m, q, 0.0, SimConfig(seed=1, n_paths=1000))
    assert est.mean == 1.0 and est.stderr == 0.0


def test_mc_multi_level():
    m, q = fixture("erlang_bv")
    cfg = SimConfig(seed=5, n_paths=50_000)
    multi = mc_hitting_probabilities(m, q, [2.0, 0.5], cfg)
    assert multi == mc_hitting_probabilities(m, q, [0.5, 2.0], cfg)[::-1]
    exact = solve(m, q).hitting_probability(np.array([2.0, 0.5]))
    for e, h in zip(multi, exact):
        assert e.within(h)


def test_mc_reproducible_across_thread_counts(monkeypatch):
    m, q = fixture("hyperexp_uv")
    cfg = SimConfig(seed=99, n_paths=30_000, chunk_size=4096)
    monkeypatch.setenv("SCALEFN_THREADS", "1")
    a = mc_hitting_probabilities(m, q, [0.5, 2.0], cfg)
    monkeypatch.setenv("SCALEFN_THREADS", "4")
    b = mc_hitting_probabilities(m, q, [0.5, 2.0], cfg)
    assert a == b
    c = mc_hitting_probabilities(m, q, [0.5, 2.0], SimConfig(seed=99, n_paths=30_000,
                                                              chunk_size=4096, stream_id=1))
    assert c != a


def test_mc_stderr_follows_root_n():
    m, q = fixture("hyperexp_uv")
    small = mc_hitting_probability(m, q, 1.0, SimConfig(seed=3, n_paths=25_000))
    big = mc_hitting_probability(m, q, 1.0, SimConfig(seed=4, n_paths=100_000))
    assert small.stderr / big.stderr == pytest.approx(2.0, rel=0.2)


def test_mc_truncation_is_reported():
    m, q = fixture("exp_bv")
    with pytest.warns(RuntimeWarning):
        est = mc_hitting_probability(m, q, 3.0, SimConfig(seed=2, n_paths=5000, max_stages=2))
    assert est.truncated > 0
    assert est.bias_bound >= est.truncated / est.n


def test_mc_rejects_bad_input():
    m = LevyModel(d=-1.0, sigma=0.0, lam=1.0, jump=MERep.exponential(1.0))
    with pytest.raises(ModelError):
        mc_hitting_probability(m, 0.1, 1.0, SimConfig(n_paths=10))
    with pytest.raises(DomainError):
        SimConfig(n_paths=0)
    with pytest.raises(DomainError):
        mc_hitting_probability(fixture("exp_bv")[0], 0.0, -1.0, SimConfig(n_paths=10))


# orbit process

rows = st.integers(1, 4).flatmap(
    lambda n: st.tuples(arrays(float, n, elements=st.floats(0.05, 1.0)),
                        arrays(float, (n, n), elements=st.floats(0.0, 2.0))))


def subgenerator(R):
    n = R.shape[0]
    return R - np.diag(R.sum(axis=1) + 0.5)


@settings(max_examples=50, deadline=None)
@given(data=rows, r=st.floats(0.0, 3.0), s=st.floats(0.0, 3.0))
def test_orbit_evolve_normalized_and_semigroup(data, r, s):
    a, R = data
    a = a / a.sum()
    C = subgenerator(R)
    one = orbit_evolve(a, C, r)
    assert one.sum() == pytest.approx(1.0, abs=1e-14)
    two = orbit_evolve(orbit_evolve(a, C, r), C, s)
    assert np.allclose(two, orbit_evolve(a, C, r + s), atol=1e-10)


def test_orbit_evolve_identity_and_errors():
    a = np.array([0.25, 0.75])
    C = np.array([[-1.0, 0.5], [0.2, -2.0]])
    assert np.array_equal(orbit_evolve(a, C, 0.0), a)
    with pytest.raises(DomainError):
        orbit_evolve(a, C, -1.0)
    with pytest.raises(OrbitDegeneracyError):
        orbit_evolve(np.array([1.0, -1.0]), np.zeros((2, 2)), 1.0)


@settings(max_examples=50, deadline=None)
@given(data=rows, t=st.integers(1, 4).flatmap(
    lambda n: arrays(float, n, elements=st.floats(0.1, 2.0))))
def test_orbit_jump_renewal_collapse(data, t):
    a, R = data
    n = a.size
    a = a / a.sum()
    t = np.resize(t, n)
    alpha = np.resize(np.arange(1.0, n + 1.0), n)
    alpha /= alpha.sum()
    out = orbit_jump(a, np.outer(t, alpha))
    assert np.allclose(out, alpha, atol=1e-14)
    assert out.sum() == pytest.approx(1.0, abs=1e-14)
    # nonnegative jump matrix keeps simplex orbits in the simplex
    simplex = orbit_jump(a, R + 0.01)
    assert np.all(simplex >= 0) and simplex.sum() == pytest.approx(1.0, abs=1e-14)


def test_orbit_jump_undefined():
    with pytest.raises(OrbitDegeneracyError):
        orbit_jump(np.array([1.0, 0.0]), np.array([[0.0, 0.0], [1.0, 0.0]]))


def test_orbit_model_validation():
    with pytest.raises(ModelError):
        OrbitModel(Cplus=[[-1.0]], Cminus=[[-1.0]], Dpm=[[2.0]], Dmp=[[1.0]], initial=[1.0])
    with pytest.raises(Exception):
        OrbitModel(Cplus=[[-1.0]], Cminus=[[-1.0]], Dpm=[[1.0, 0.0]], Dmp=[[1.0]], initial=[1.0])


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_sylvester_recursion_matches_solver(name):
    m, q = fixture(name)
    sol = solve(m, q)
    om = embedding(m, q)
    Psi, _ = sylvester_psi(om)
    assert np.allclose(Psi[0], sol.Psi, atol=1e-12)
    assert riccati_residual(om, Psi) <= 1e-12


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_record_formula_with_killing_free_exit(name):
    m, q = fixture(name)
    om = embedding(m, q)
    Psi, _ = sylvester_psi(om)
    beta = np.full(om.n_minus, 1.0 / om.n_minus)
    assert np.array_equal(downward_record_expectation(beta, om, Psi, 0.0), beta)


def test_record_exp_fixture():
    m, q = fixture("exp_bv")
    om = bv_embedding(m, q)
    Psi, _ = sylvester_psi(om)
    rec = downward_record_expectation(om.initial, om, Psi, 1.0, start="plus")
    assert rec.sum() == pytest.approx(0.5 * E1, rel=1e-12)


def test_record_matches_simulation_minus_start():
    m, q = fixture("erlang_bv")
    om = bv_embedding(m, q)
    Psi, _ = sylvester_psi(om)
    beta = np.array([0.3, 0.7])
    exact = downward_record_expectation(beta, om, Psi, 1.5)
    est = mc_orbit_record(om, 1.5, SimConfig(seed=8, n_paths=200_000), beta=beta)
    for e, v in zip(est, exact):
        assert abs(e.mean - v) <= 3 * e.stderr + e.bias_bound


def test_orbit_mc_heavy_killing():
    m, _ = fixture("exp_bv")
    est = mc_orbit_psi(bv_embedding(m, 1000.0), SimConfig(seed=4, n_paths=100_000))
    assert abs(est[0].mean) <= 3 * est[0].stderr + 1e-3


def test_orbit_mc_estimates_are_probabilities():
    m, q = fixture("hyperexp_uv")
    est = mc_orbit_psi(uv_embedding(m, q), SimConfig(seed=6, n_paths=50_000))
    means = np.array([e.mean for e in est])
    assert np.all((means >= 0) & (means <= 1)) and means.sum() <= 1


def test_orbit_mc_rejects_non_ph():
    m, q = fixture("oscillating_uv")
    with pytest.raises(UnsupportedModelError):
        mc_orbit_psi(uv_embedding(m, q), SimConfig(n_paths=10))


def test_level_drift_bound_exp_fixture():
    # the fluid level is the process itself, so the rate is the adjustment coefficient
    m, q = fixture("exp_bv")
    r, K = level_drift_bound(bv_embedding(m, q))
    assert r == pytest.approx(1.0, rel=1e-9)
    assert K >= 1.0
