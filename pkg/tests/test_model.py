import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import block_diag

from nmqred.linalg import LinalgError, spectral_abscissa
from nmqred.model import (
    PhysicalParams,
    build_complex,
    build_example,
    paper_example_params,
    quadrature_map,
    reference_reduced_model,
    to_quadrature,
    with_input_count,
)
from conftest import random_params


W = [10.85, 9.74, 10.03, 8.93, 5.06]
G = [0.954, 0.987, 0.848, 1.034, 0.775]
KAPPA = [1.25, 1.14]


def mode_block(gamma, omega):
    return np.array([[-gamma / 2, omega], [-omega, -gamma / 2]])


def reference_A():
    Fp = block_diag(mode_block(G[0], W[0]), mode_block(G[1], W[1]))
    Fa = block_diag(
        mode_block(G[2], W[2]), mode_block(G[3], W[3]), mode_block(G[4], W[4])
    )
    KG = np.array(
        [[np.sqrt(KAPPA[i] * G[2 + j]) / 2 for j in range(3)] for i in range(2)]
    )
    Fpa = np.kron(KG, np.eye(2))
    return np.block([[Fp, Fpa], [-Fpa.T, Fa]])


def test_quadrature_map_mode_entry():
    got = quadrature_map(np.array([[-1j * 10.85 - 0.477]]))
    assert_allclose(got, np.array([[-0.477, 10.85], [-10.85, -0.477]]))


def test_quadrature_map_real_scalar():
    assert_allclose(quadrature_map(np.array([[3.0]])), 3.0 * np.eye(2))


def test_quadrature_map_imaginary_unit():
    assert_allclose(quadrature_map(np.array([[1j]])), [[0.0, -1.0], [1.0, 0.0]])


def test_quadrature_map_ring_homomorphism(rng):
    X = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    Y = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    assert_allclose(
        quadrature_map(X @ Y), quadrature_map(X) @ quadrature_map(Y), atol=1e-12
    )
    assert_allclose(
        quadrature_map(X + X), quadrature_map(X) + quadrature_map(X), atol=1e-12
    )
    assert_allclose(
        quadrature_map(X.conj().T), quadrature_map(X).T, atol=1e-12
    )


def test_build_complex_single_mode():
    p = PhysicalParams(
        m=1, n=0, omega_p=(10.85,), omega_a=(), gamma_p=(0.954,), gamma_a=(),
        kappa=(0.0,),
    )
    q = build_complex(p)
    assert_allclose(q.F, np.array([[-0.477 - 10.85j]]))
    assert_allclose(q.G, np.array([[-np.sqrt(0.954)]]))
    assert_allclose(q.H, np.array([[np.sqrt(0.954)]]))


def test_build_complex_decoupled():
    p = PhysicalParams(
        m=2, n=2, omega_p=(1.0, 2.0), omega_a=(3.0, 4.0),
        gamma_p=(0.5, 0.5), gamma_a=(0.5, 0.5), kappa=(0.0, 0.0),
    )
    q = build_complex(p)
    assert np.linalg.norm(q.F[:2, 2:]) == 0
    assert np.linalg.norm(q.F[2:, :2]) == 0


def test_build_complex_satisfies_complex_conditions(rng):
    from nmqred.realizability import check_complex

    q = build_complex(random_params(rng, 2, 3))
    report = check_complex(q, tol=1e-12)
    assert report.passed, report.residuals


def test_reference_coupling_block():
    q = build_complex(paper_example_params())
    F12 = q.F[:2, 2:]
    expected = np.array(
        [[np.sqrt(KAPPA[i] * G[2 + j]) / 2 for j in range(3)] for i in range(2)]
    )
    assert_allclose(F12, expected, atol=1e-14)
    assert_allclose(quadrature_map(F12), np.kron(expected, np.eye(2)), atol=1e-14)


def test_to_quadrature_reference_matrices():
    mdl = build_example()
    assert_allclose(mdl.A, reference_A(), atol=1e-12)
    assert_allclose(
        mdl.B11, np.diag(np.sqrt([G[0], G[0], G[1], G[1]])), atol=1e-14
    )
    assert_allclose(
        mdl.B22,
        np.diag(np.sqrt([G[2], G[2], G[3], G[3], G[4], G[4]])),
        atol=1e-14,
    )
    assert_allclose(mdl.C, np.hstack([-mdl.B11.T, np.zeros((4, 6))]), atol=1e-14)
    assert_allclose(mdl.D, np.hstack([np.eye(4), np.zeros((4, 6))]), atol=1e-14)


def test_to_quadrature_zero_system():
    p = PhysicalParams(
        m=1, n=1, omega_p=(1.0,), omega_a=(1.0,), gamma_p=(1.0,), gamma_a=(1.0,),
        kappa=(0.0,),
        Omega_p=np.zeros((1, 1)), Omega_a=np.zeros((1, 1)),
        N_p=np.zeros((1, 1)), N_a=np.zeros((1, 1)),
        G_a_row=np.zeros((1, 1)), K_p_row=np.zeros((1, 1)),
    )
    mdl = to_quadrature(build_complex(p))
    assert np.linalg.norm(mdl.A) == 0
    assert np.linalg.norm(mdl.B) == 0
    assert np.linalg.norm(mdl.C) == 0
    assert_allclose(mdl.D, np.hstack([np.eye(2), np.zeros((2, 2))]))


def test_single_ancillary_coupling_scale():
    p = PhysicalParams(
        m=1, n=1, omega_p=(10.85,), omega_a=(10.03,), gamma_p=(0.954,),
        gamma_a=(0.848,), kappa=(1.25,),
    )
    mdl = to_quadrature(build_complex(p))
    assert_allclose(
        mdl.A12, np.sqrt(1.25 * 0.848) / 2 * np.eye(2), atol=1e-14
    )


def test_build_example_summary():
    mdl = build_example()
    assert mdl.m == 2 and mdl.k == 3 and mdl.n_in == 3
    assert mdl.A12[0, 0] == pytest.approx(np.sqrt(1.25 * 0.848) / 2, abs=1e-14)
    assert spectral_abscissa(mdl.A) < 0


def test_sign_conventions_agree_on_invariants():
    from nmqred.realizability import check_quadrature

    q = build_complex(paper_example_params())
    pos = to_quadrature(q, sign_convention="positive")
    phys = to_quadrature(q, sign_convention="physical")
    assert_allclose(pos.B, -phys.B)
    assert check_quadrature(pos, tol=1e-10).passed
    assert check_quadrature(phys, tol=1e-10).passed
    assert_allclose(pos.B @ pos.B.T, phys.B @ phys.B.T, atol=1e-14)


def test_to_quadrature_rejects_extra_probe_channels():
    p = PhysicalParams(
        m=2, n=1, omega_p=(1.0, 2.0), omega_a=(3.0,), gamma_p=(0.5, 0.5),
        gamma_a=(0.5,), kappa=(0.1, 0.1),
        N_p=np.array([[0.7, 0.7]]),
    )
    q = build_complex(p)
    with pytest.raises(LinalgError):
        to_quadrature(q)


def test_reference_reduced_model_layout():
    red = reference_reduced_model()
    assert red.m == 2 and red.k == 1 and red.n_in == 3
    assert_allclose(red.A22, [[-0.6278, 10.0793], [-10.0696, -0.6277]])
    assert np.linalg.norm(red.B22[:, 2:]) == 0
    assert spectral_abscissa(red.A) < 0


def test_with_input_count_roundtrip():
    red = reference_reduced_model()
    sq = with_input_count(red, 1)
    assert sq.B.shape == (6, 6)
    back = with_input_count(sq, 3)
    assert_allclose(back.B, red.B)
    assert_allclose(back.D, red.D)


def test_params_validation():
    with pytest.raises(LinalgError):
        PhysicalParams(
            m=1, n=1, omega_p=(1.0,), omega_a=(1.0,), gamma_p=(-0.5,),
            gamma_a=(1.0,), kappa=(0.1,),
        )
    with pytest.raises(LinalgError):
        PhysicalParams(
            m=1, n=1, omega_p=(1.0, 2.0), omega_a=(1.0,), gamma_p=(0.5,),
            gamma_a=(1.0,), kappa=(0.1,),
        )
    with pytest.raises(LinalgError):
        PhysicalParams(
            m=1, n=1, omega_p=(1.0,), omega_a=(1.0,), gamma_p=(0.5,),
            gamma_a=(1.0,), kappa=(0.1,),
            Omega_p=np.array([[1j]]),
        )
