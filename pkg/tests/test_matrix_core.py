import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from linfcontrol.matrix_core import DimensionError, as_matrix, expm, orth_complement, range_basis, rank

finite = st.floats(-1.0, 1.0, allow_nan=False)


def small_matrix(n_max=4):
    return st.integers(1, n_max).flatmap(lambda n: arrays(float, (n, n), elements=finite))


def test_expm_identity_at_zero():
    A = np.array([[3.0, -1.0], [2.0, 7.0]])
    np.testing.assert_array_equal(expm(A, 0.0), np.eye(2))


def test_expm_nilpotent():
    A = [[0, 1], [0, 0]]
    for t in (0.3, 2.0, 11.0):
        np.testing.assert_allclose(expm(A, t), [[1, t], [0, 1]], rtol=1e-12, atol=1e-14)


def test_expm_diagonal():
    a = np.array([-3.0, 0.5, 2.0])
    t = 1.7
    np.testing.assert_allclose(expm(np.diag(a), t), np.diag(np.exp(a * t)), rtol=1e-12)


def test_expm_accuracy_large_argument():
    # rotation generator: closed form, |At| = 50
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    t = 50.0
    exact = np.array([[np.cos(t), np.sin(t)], [-np.sin(t), np.cos(t)]])
    assert np.linalg.norm(expm(A, t) - exact) <= 1e-10 * np.linalg.norm(exact)


def test_expm_rejects_non_square():
    with pytest.raises(DimensionError):
        expm(np.ones((2, 3)))


def test_as_matrix_rejects_nan():
    with pytest.raises(ValueError):
        as_matrix([[1.0, np.nan]])


@settings(max_examples=60, deadline=None)
@given(small_matrix(), st.floats(0, 5), st.floats(0, 5), st.floats(0.1, 5.0))
def test_semigroup_law(A, s, t, scale):
    A = A * scale / max(1.0, np.linalg.norm(A, 2))
    lhs = expm(A, s + t)
    rhs = expm(A, s) @ expm(A, t)
    assert np.linalg.norm(lhs - rhs) <= 1e-9 * (1 + np.linalg.norm(lhs))


@settings(max_examples=60, deadline=None)
@given(small_matrix(), st.floats(0, 1.2))
def test_inverse_flow(A, t):
    # rounding in the product grows like |e^{At}| |e^{-At}| <= e^{2|A|t}, so |At| stays <= 6
    A = A * 5 / max(1.0, np.linalg.norm(A, 2))
    np.testing.assert_allclose(expm(-A, t) @ expm(A, t), np.eye(A.shape[0]), atol=1e-9)


def test_rank_examples():
    assert rank(np.eye(3)) == 3
    assert rank(np.zeros((3, 3))) == 0
    assert rank([[1, 2], [2, 4]]) == 1


def test_rank_rejects_bad_tol():
    with pytest.raises(ValueError):
        rank(np.eye(2), tol=0.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 5), st.integers(0, 2**31 - 1))
def test_rank_invariance(rows, cols, r, seed):
    rng = np.random.default_rng(seed)
    r = min(r, rows, cols)
    M = rng.standard_normal((rows, r)) @ rng.standard_normal((r, cols))
    base = rank(M, tol=1e-9)
    assert base == r
    assert rank(M[rng.permutation(rows)][:, rng.permutation(cols)], tol=1e-9) == base
    Q, _ = np.linalg.qr(rng.standard_normal((rows, rows)))
    D = np.diag(rng.uniform(0.5, 2.0, rows))
    assert rank(Q @ D @ M, tol=1e-9) == base


def test_range_basis_examples():
    np.testing.assert_allclose(np.abs(range_basis(np.eye(3))), np.eye(3), atol=1e-15)
    assert range_basis(np.zeros((3, 2))).shape == (3, 0)
    P = range_basis([[0, 0], [1, 1]])
    assert P.shape == (2, 1)
    np.testing.assert_allclose(np.abs(P[:, 0]), [0, 1], atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 6), st.integers(0, 2**31 - 1))
def test_range_basis_orthonormal_and_complement(n, r, seed):
    rng = np.random.default_rng(seed)
    r = min(r, n)
    M = rng.standard_normal((n, r)) @ rng.standard_normal((r, n)) if r else np.zeros((n, n))
    P = range_basis(M, tol=1e-9)
    assert P.shape[1] == rank(M, tol=1e-9)
    np.testing.assert_allclose(P.T @ P, np.eye(P.shape[1]), atol=1e-12)
    C = orth_complement(P)
    assert C.shape == (n, n - P.shape[1])
    np.testing.assert_allclose(np.hstack([P, C]).T @ np.hstack([P, C]), np.eye(n), atol=1e-12)
