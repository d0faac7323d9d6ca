import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm

from mescale.errors import DimensionError, SingularMatrixError
from mescale.linalg import LUSolver, as_matrix, mat_exp, solve_linear, spectral_abscissa

finite = st.floats(-3.0, 3.0, allow_nan=False)


def square(n_max=6):
    return st.integers(1, n_max).flatmap(lambda n: arrays(float, (n, n), elements=finite))


@settings(max_examples=60, deadline=None)
@given(A=square(), scale=st.sampled_from([1e-4, 0.1, 1.0, 10.0]))
def test_mat_exp_matches_scipy(A, scale):
    A = A * scale
    ref = expm(A)
    # two backward-stable implementations differ by up to cond(exp, A) ~ ||A|| ulps
    tol = 1e-12 * max(1.0, np.linalg.norm(A, 1))
    assert np.allclose(mat_exp(A), ref, rtol=tol, atol=tol * np.abs(ref).max())


def test_mat_exp_exact_rank_one():
    # J = ones(n, n) has J^2 = n J, so e^{cJ} = I + (e^{cn} - 1) / n J
    n, c = 5, 25.0
    expect = np.eye(n) + np.expm1(c * n) / n * np.ones((n, n))
    assert np.allclose(mat_exp(c * np.ones((n, n))), expect, rtol=1e-13)


@settings(max_examples=30, deadline=None)
@given(A=square(4))
def test_mat_exp_inverse_pair(A):
    assert np.allclose(mat_exp(A) @ mat_exp(-A), np.eye(A.shape[0]), atol=1e-8)


def test_mat_exp_complex():
    A = np.array([[0.0, 1.0], [-1.0, 0.0]]) * 1j + np.diag([-1.0, -2.0])
    assert np.allclose(mat_exp(A), expm(A), rtol=1e-12)


def test_mat_exp_zero_and_scalar():
    assert np.array_equal(mat_exp(np.zeros((3, 3))), np.eye(3))
    assert mat_exp(np.array([[-1.0]]))[0, 0] == pytest.approx(np.exp(-1.0), rel=1e-15)


def test_mat_exp_large_norm():
    A = np.array([[-50.0, 49.0], [0.0, -1.0]])
    assert np.allclose(mat_exp(A), expm(A), rtol=1e-10, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(A=square(5))
def test_lu_solve_both_sides(A):
    n = A.shape[0]
    A = A + 8.0 * np.eye(n)
    b = np.arange(1.0, n + 1.0)
    lu = LUSolver(A)
    assert np.allclose(A @ lu.solve(b), b)
    assert np.allclose(lu.solve_left(b) @ A, b)
    assert np.allclose(solve_linear(A, b), np.linalg.solve(A, b))


def test_singular_matrix_rejected():
    with pytest.raises(SingularMatrixError):
        LUSolver(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_spectral_abscissa():
    assert spectral_abscissa(np.array([[-1.0, 5.0], [0.0, -3.0]])) == pytest.approx(-1.0)
    assert spectral_abscissa(np.array([[-1.0, 2.0], [-2.0, -1.0]])) == pytest.approx(-1.0)


def test_as_matrix_shape_checks():
    assert as_matrix(2.0).shape == (1, 1)
    with pytest.raises(DimensionError):
        as_matrix(np.ones((2, 3)), square=True)
    with pytest.raises(DimensionError):
        as_matrix([[np.nan]])
