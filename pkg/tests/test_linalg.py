import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import gauss_solve, jacobi_eigenvalues
from seasparse.errors import DimensionMismatch, EmptySupport, NoConvergence, ZeroColumn
from seasparse.linalg import (coherence, conjugate_gradient, gaussian_convolution_matrix,
                              gaussian_matrix, lipschitz_constant, normalize_columns,
                              random_orthonormal, restricted_least_squares, spectral_norm_sq)

# exp(-1/(4 sigma^2)) at sigma = 3: correlation of unit Gaussian kernels one sample apart
COHERENCE_SIGMA3 = 0.9726044771163485


def test_normalize_identity_and_345():
    A, s = normalize_columns(np.eye(3))
    assert np.array_equal(A, np.eye(3)) and np.array_equal(s, np.ones(3))
    A, s = normalize_columns(np.array([[3.0], [4.0]]))
    assert np.allclose(A[:, 0], [0.6, 0.8], atol=1e-15) and s[0] == 5.0


def test_normalize_round_trip():
    A = gaussian_matrix(8, 5, 1)
    An, s = normalize_columns(A)
    assert np.allclose(np.linalg.norm(An, axis=0), 1, atol=1e-12)
    assert np.max(np.abs(An * s - A)) <= 1e-12


def test_normalize_zero_column():
    A = np.ones((3, 3))
    A[:, 1] = 0
    with pytest.raises(ZeroColumn) as exc:
        normalize_columns(A)
    assert exc.value.index == 1


def test_spectral_norm_examples():
    assert spectral_norm_sq(np.eye(4)) == pytest.approx(1, rel=1e-10)
    assert spectral_norm_sq(np.diag([1.0, 2.0, 3.0])) == pytest.approx(9, rel=1e-10)
    A = gaussian_matrix(10, 6, 3)
    ref = jacobi_eigenvalues(A.T @ A)[-1]
    assert spectral_norm_sq(A, tol=1e-14, max_iter=10000) == pytest.approx(ref, rel=1e-8)


def test_spectral_norm_dominates_probes():
    A = gaussian_matrix(9, 7, 4)
    L = spectral_norm_sq(A)
    rng = np.random.default_rng(0)
    for _ in range(100):
        v = rng.standard_normal(7)
        assert np.sum((A @ v) ** 2) / (v @ v) <= L * (1 + 1e-10)


def test_spectral_norm_no_convergence():
    with pytest.raises(NoConvergence):
        spectral_norm_sq(gaussian_matrix(30, 30, 0), tol=1e-16, max_iter=2)


def test_lipschitz_conventions():
    A = np.diag([1.0, 2.0, 3.0])
    assert lipschitz_constant(A) == pytest.approx(9)
    assert lipschitz_constant(A, "sigma") == pytest.approx(3)
    with pytest.raises(ValueError):
        lipschitz_constant(A, "other")


def test_rls_identity():
    x = restricted_least_squares(np.eye(3), [1], np.array([1.0, 5.0, 2.0]))
    assert x == pytest.approx([5.0])


def test_rls_matches_direct_solve():
    A = gaussian_matrix(12, 4, 11)
    y = gaussian_matrix(12, 1, 12)[:, 0]
    S = [0, 2, 3]
    ref = gauss_solve(A[:, S].T @ A[:, S], A[:, S].T @ y)
    assert np.allclose(restricted_least_squares(A, S, y), ref, atol=1e-8)


def test_rls_duplicate_columns():
    A = gaussian_matrix(6, 3, 2)
    A[:, 1] = A[:, 0]
    x = restricted_least_squares(A, [0, 1], A[:, 0])
    assert np.linalg.norm(A[:, [0, 1]] @ x - A[:, 0]) <= 1e-8


def test_rls_errors():
    A = np.eye(3)
    with pytest.raises(EmptySupport):
        restricted_least_squares(A, [], np.ones(3))
    with pytest.raises(DimensionMismatch):
        restricted_least_squares(A, [0], np.ones(4))
    with pytest.raises(DimensionMismatch):
        restricted_least_squares(A, [5], np.ones(3))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10_000))
def test_rls_normal_equation_residual(d, seed):
    A = gaussian_matrix(20, d, seed)
    y = gaussian_matrix(20, 1, seed + 1)[:, 0]
    S = list(range(d))
    x = restricted_least_squares(A, S, y)
    rhs = A.T @ y
    assert np.linalg.norm(A.T @ A @ x - rhs) <= 1e-10 * np.linalg.norm(rhs) * 1.0001


def test_cg_zero_rhs():
    assert np.array_equal(conjugate_gradient(np.eye(2), np.zeros(2)), np.zeros(2))


def test_gaussian_matrix_properties():
    assert np.array_equal(gaussian_matrix(3, 4, 9), gaussian_matrix(3, 4, 9))
    assert not np.array_equal(gaussian_matrix(3, 4, 9), gaussian_matrix(3, 4, 10))
    A = gaussian_matrix(1000, 1000, 5)
    assert abs(A.mean()) < 0.01 and abs(A.var() - 1) < 0.02


def test_convolution_matrix():
    A = gaussian_convolution_matrix(500, 3.0)
    assert abs(coherence(A) - 0.97) <= 0.005
    assert coherence(A) == pytest.approx(COHERENCE_SIGMA3, abs=1e-6)
    B = gaussian_convolution_matrix(128, 3.0)
    assert np.max(np.abs(B - B.T)) <= 1e-12
    n = 17
    C = gaussian_convolution_matrix(n, 2.0)
    for j in range(n):
        assert np.allclose(C[:, j], np.roll(C[:, 0], j), atol=1e-15)


def test_coherence_examples():
    assert coherence(np.eye(3)) == 0
    A = normalize_columns(np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 1.0]]))[0]
    assert coherence(A) == pytest.approx(1.0)


def test_random_orthonormal():
    Q = random_orthonormal(4, 4, 0)
    assert np.allclose(Q.T @ Q, np.eye(4), atol=1e-10)
    Q = random_orthonormal(8, 3, 1)
    assert np.allclose(Q.T @ Q, np.eye(3), atol=1e-10)
    assert np.array_equal(Q, random_orthonormal(8, 3, 1))
    with pytest.raises(ValueError):
        random_orthonormal(2, 3, 0)
