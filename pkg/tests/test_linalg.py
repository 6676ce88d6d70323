import numpy as np
import pytest
from numpy.testing import assert_allclose

from nmqred.linalg import (
    BlockSpec,
    LinalgError,
    NotHurwitzError,
    eigenvalues,
    is_psd,
    kron,
    real_schur,
    solve_lyapunov,
    spectral_abscissa,
)
from conftest import random_hurwitz


def test_schur_identity():
    Q, T = real_schur(np.eye(3))
    assert_allclose(Q, np.eye(3), atol=1e-14)
    assert_allclose(T, np.eye(3), atol=1e-14)


def test_schur_already_triangular():
    Q, T = real_schur(np.diag([-1.0, -2.0]))
    assert_allclose(sorted(np.diag(T)), [-2.0, -1.0])
    assert_allclose(Q @ Q.T, np.eye(2), atol=1e-14)


def test_schur_reconstruction(rng):
    M = rng.standard_normal((6, 6))
    Q, T = real_schur(M)
    assert_allclose(Q @ T @ Q.T, M, rtol=0, atol=1e-12 * np.linalg.norm(M))
    assert_allclose(Q @ Q.T, np.eye(6), atol=1e-13)


def test_schur_rejects_nonsquare():
    with pytest.raises(LinalgError):
        real_schur(np.ones((2, 3)))


def test_eigenvalues_mode_block():
    gamma, omega = 0.954, 10.85
    M = np.array([[-gamma / 2, omega], [-omega, -gamma / 2]])
    vals = eigenvalues(M)
    assert_allclose(sorted(vals.real), [-0.477, -0.477], atol=1e-12)
    assert_allclose(sorted(vals.imag), [-10.85, 10.85], atol=1e-12)


def test_eigenvalues_identity():
    assert_allclose(eigenvalues(np.eye(2)), [1.0, 1.0])


def test_eigenvalues_companion():
    # companion matrix of (s+1)(s+2)(s+3) = s^3 + 6 s^2 + 11 s + 6
    Cm = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-6.0, -11.0, -6.0]])
    assert_allclose(eigenvalues(Cm), [-3.0, -2.0, -1.0], atol=1e-10)


def test_eigenvalues_similarity_invariant(rng):
    for _ in range(10):
        n = int(rng.integers(2, 9))
        A = rng.standard_normal((n, n))
        Q = np.linalg.qr(rng.standard_normal((n, n)))[0]
        v1 = eigenvalues(A)
        v2 = eigenvalues(Q.T @ A @ Q)
        assert_allclose(v1, v2, atol=1e-8 * max(1, np.linalg.norm(A)))


def test_lyapunov_analytic():
    X = solve_lyapunov(-np.eye(2), 2.0 * np.eye(2))
    assert_allclose(X, np.eye(2), atol=1e-14)
    X = solve_lyapunov(np.diag([-1.0, -2.0]), np.diag([2.0, 4.0]))
    assert_allclose(X, np.eye(2), atol=1e-14)


def test_lyapunov_mode_block():
    gamma, omega = 0.954, 10.85
    A = np.array([[-gamma / 2, omega], [-omega, -gamma / 2]])
    X = solve_lyapunov(A, gamma * np.eye(2))
    res = A @ X + X @ A.T + gamma * np.eye(2)
    assert np.linalg.norm(res) <= 1e-12
    assert_allclose(X, np.eye(2), atol=1e-12)


def test_lyapunov_residual_bound(rng):
    for _ in range(30):
        n = int(rng.integers(2, 25))
        A = random_hurwitz(rng, n)
        G = rng.standard_normal((n, n))
        RHS = G @ G.T
        X = solve_lyapunov(A, RHS)
        res = np.linalg.norm(A @ X + X @ A.T + RHS)
        bound = 1e-10 * (
            np.linalg.norm(A) * np.linalg.norm(X) + np.linalg.norm(RHS)
        )
        assert res <= bound
        assert np.linalg.norm(X - X.T) <= 1e-12 * max(1, np.linalg.norm(X))


def test_lyapunov_rejects_unstable():
    with pytest.raises(NotHurwitzError) as err:
        solve_lyapunov(np.eye(2), np.eye(2))
    assert err.value.abscissa > 0


def test_lyapunov_rejects_mismatch():
    with pytest.raises(LinalgError):
        solve_lyapunov(-np.eye(2), np.eye(3))


def test_kron_scalar():
    assert_allclose(kron(np.array([[2.0]]), np.eye(2)), 2.0 * np.eye(2))


def test_kron_reference_coupling():
    beta = np.array([[0.5528], [0.5262]])
    expected = np.array(
        [[0.5528, 0], [0, 0.5528], [0.5262, 0], [0, 0.5262]]
    )
    assert_allclose(kron(beta, np.eye(2)), expected)


def test_kron_index_formula(rng):
    L = rng.standard_normal((2, 3))
    R = rng.standard_normal((2, 2))
    K = kron(L, R)
    p, q = R.shape
    for i in range(2):
        for j in range(3):
            for k in range(p):
                for l in range(q):
                    assert K[i * p + k, j * q + l] == L[i, j] * R[k, l]


def test_kron_mixed_product(rng):
    A, B = rng.standard_normal((2, 3)), rng.standard_normal((3, 2))
    C, D = rng.standard_normal((3, 2)), rng.standard_normal((2, 4))
    lhs = kron(A, B) @ kron(C, D)
    rhs = kron(A @ C, B @ D)
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * max(1, np.linalg.norm(rhs))


def test_is_psd():
    assert is_psd(np.eye(4), tol=1e-10)
    assert not is_psd(np.diag([1.0, -1e-3]), tol=1e-10)


def test_is_psd_gram(rng):
    G = rng.standard_normal((5, 5))
    assert is_psd(G.T @ G, tol=1e-10)


def test_is_psd_rejects_asymmetric():
    with pytest.raises(LinalgError):
        is_psd(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_block_spec():
    spec = BlockSpec((4,), (4,))
    M = np.arange(100.0).reshape(10, 10)
    blocks = spec.blocks(M)
    assert blocks[0][0].shape == (4, 4)
    assert blocks[1][1].shape == (6, 6)
    with pytest.raises(LinalgError):
        BlockSpec((4, 2), (1,))
