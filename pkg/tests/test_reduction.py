import numpy as np
import pytest
from numpy.testing import assert_allclose

from nmqred.linalg import LinalgError, is_hurwitz
from nmqred.model import build_example, reference_reduced_model
from nmqred.analysis import GramianPair, build_error_system, error_gramians
from nmqred.realizability import check_quadrature
from nmqred.reduction import (
    ReducedParams,
    ReductionSpec,
    gradient,
    model_to_params,
    objective_and_gramians,
    params_to_model,
    reconstruct_Br,
    reconstruct_Fa,
    reduce_model,
    truncation_seed,
)
from conftest import random_model, random_reduced


def test_identity_reduction_objective_zero():
    orig = build_example()
    red = params_to_model(orig, model_to_params(orig))
    J, _ = objective_and_gramians(orig, red)
    assert J <= 1e-12


def test_reference_pair_objective_regression():
    orig = build_example()
    J, g = objective_and_gramians(orig, reference_reduced_model())
    assert J == pytest.approx(0.8830303468640218 ** 2, rel=1e-10)
    assert g.Q322.shape == (2, 2)


def test_objective_zero_iff_transfer_equal(rng):
    from nmqred.analysis import transfer_eval

    orig = random_model(rng, 1, 2)
    red, params = random_reduced(rng, orig, 1)
    J, _ = objective_and_gramians(orig, red)
    assert J >= 0
    probe = [0.5j, 2.0j, 7.0j]
    diffs = [
        np.linalg.norm(
            transfer_eval(orig, s)
            - np.hstack(
                [transfer_eval(red, s),
                 np.zeros((2 * orig.m, orig.n_inputs - red.n_inputs))]
            )
        )
        for s in probe
    ]
    assert (J <= 1e-12) == all(d <= 1e-6 for d in diffs)


def central_fd_gradient(orig, params, h):
    m, r = params.beta.shape
    x0 = params.pack()
    fd = np.zeros_like(x0)
    for i in range(x0.size):
        xp, xm = x0.copy(), x0.copy()
        xp[i] += h
        xm[i] -= h
        Jp, _ = gradient(orig, ReducedParams.unpack(xp, m, r, orig.n_in))
        Jm, _ = gradient(orig, ReducedParams.unpack(xm, m, r, orig.n_in))
        fd[i] = (Jp - Jm) / (2 * h)
    return fd


def test_gradient_matches_finite_differences(rng):
    # relative agreement down to the FD noise floor: the objective is a
    # Lyapunov trace accurate to ~1e-13, so differences carry an
    # irreducible ~1e-13/h absolute error per component
    h = 5e-5
    floor = 1e-3
    for m, n, r in [(1, 2, 1), (2, 3, 1), (1, 3, 2)]:
        orig = random_model(rng, m, n)
        _, params = random_reduced(rng, orig, r)
        _, grad = gradient(orig, params)
        fd = central_fd_gradient(orig, params, h)
        err = np.abs(grad - fd)
        assert np.all(err <= 1e-5 * np.maximum(np.abs(fd), floor)), (grad, fd)


def test_gradient_vanishes_at_exact_match():
    orig = build_example()
    params = model_to_params(orig)
    J, grad = gradient(orig, params)
    assert J <= 1e-12
    assert np.linalg.norm(grad) <= 1e-9


def test_input_stationarity_at_exact_match():
    orig = build_example()
    red = params_to_model(orig, model_to_params(orig))
    es = build_error_system(orig, red)
    g = error_gramians(es)
    B_red = es.B_hat[es.n_orig:]
    assert np.linalg.norm(g.Q2.T @ orig.B + g.Q3 @ B_red) <= 1e-8


def test_reconstruct_Br_identity_case():
    orig = build_example()
    red = params_to_model(orig, model_to_params(orig))
    _, g = objective_and_gramians(orig, red)
    Br, diag = reconstruct_Br(g, orig)
    assert_allclose(Br[4:, 4:], orig.B22, atol=1e-9)
    assert_allclose(Br[:4, :4], orig.B11, atol=1e-12)
    assert diag["cond_Q322"] < 1e10


def test_reconstruct_Br_zero_cross_gramian():
    orig = build_example()
    no, nr = 16, 6
    Q = np.eye(no + nr)
    P = np.eye(no + nr)
    g = GramianPair(P=P, Q=Q, m=2, n=3, r=1)
    # Q222 = 0, Q322 = I  ->  ancillary block zero
    Br, _ = reconstruct_Br(g, orig)
    assert np.linalg.norm(Br[4:, 4:]) == 0


def test_reconstruct_Fa_identity_case():
    orig = build_example()
    red = params_to_model(orig, model_to_params(orig))
    _, g = objective_and_gramians(orig, red)
    Fa, diag = reconstruct_Fa(g, orig)
    assert_allclose(Fa, orig.A22, atol=1e-8)
    assert not diag["sign_flipped"]


def test_reconstruct_Fa_diagonal_toy():
    orig = build_example()
    no = 2 * (orig.m + orig.k)
    nr = no
    Q = np.zeros((no + nr, no + nr))
    P = np.zeros_like(Q)
    q2 = -2.0 * np.eye(no)
    q3 = 4.0 * np.eye(no)
    p2 = 3.0 * np.eye(no)
    p3 = 1.5 * np.eye(no)
    Q[:no, :no] = np.eye(no)
    Q[:no, no:] = q2
    Q[no:, :no] = q2.T
    Q[no:, no:] = q3
    P[:no, :no] = np.eye(no)
    P[:no, no:] = p2
    P[no:, :no] = p2.T
    P[no:, no:] = p3
    g = GramianPair(P=P, Q=Q, m=orig.m, n=orig.k, r=orig.k)
    Fa, _ = reconstruct_Fa(g, orig)
    # -(q3^-1 q2') A22 (p2 p3^-1) = -(-0.5) * A22 * 2 = A22
    assert_allclose(Fa, orig.A22, atol=1e-12)


def test_reconstruct_Fa_sign_flag():
    orig = build_example()
    no = 2 * (orig.m + orig.k)
    Q = np.block([[np.eye(no), np.eye(no)], [np.eye(no), np.eye(no) * 1.0]])
    P = Q.copy()
    g = GramianPair(P=P, Q=Q, m=orig.m, n=orig.k, r=orig.k)
    Fa, diag = reconstruct_Fa(g, orig)
    assert diag["sign_flipped"]
    assert_allclose(Fa, -orig.A22, atol=1e-12)


def test_truncation_seed_feasible():
    orig = build_example()
    for r in (1, 2):
        params = truncation_seed(orig, r)
        red = params_to_model(orig, params)
        assert check_quadrature(red, tol=1e-12).passed
        assert is_hurwitz(red.A)


def test_reduce_rejects_full_order():
    orig = build_example()
    with pytest.raises(LinalgError):
        reduce_model(orig, ReductionSpec(r=3, method="gradient"))


def test_reduce_gradient_reference():
    orig = build_example()
    res = reduce_model(orig, ReductionSpec(r=1, method="gradient", seed=7))
    # frozen locally-optimal value of the canonical zero-padded objective
    assert res.h2_error == pytest.approx(0.4975472089619928, rel=1e-5)
    assert res.report.passed
    assert is_hurwitz(res.reduced.A)
    J, _ = objective_and_gramians(orig, res.reduced)
    assert np.sqrt(J) == pytest.approx(res.h2_error, rel=1e-10)


def test_reduce_monotone_improvement_over_seed():
    orig = build_example()
    seed_params = truncation_seed(orig, 1)
    J_seed, _ = objective_and_gramians(orig, params_to_model(orig, seed_params))
    res = reduce_model(orig, ReductionSpec(r=1, method="gradient", seed=0))
    assert res.h2_error ** 2 <= J_seed + 1e-12


def test_reduce_r2_improves_on_r1():
    orig = build_example()
    r1 = reduce_model(orig, ReductionSpec(r=1, method="gradient", seed=0))
    r2 = reduce_model(orig, ReductionSpec(r=2, method="gradient", seed=0))
    assert r2.h2_error < r1.h2_error
    assert r2.report.passed and is_hurwitz(r2.reduced.A)


def test_reduce_deterministic():
    orig = build_example()
    a = reduce_model(orig, ReductionSpec(r=1, method="gradient", seed=3))
    b = reduce_model(orig, ReductionSpec(r=1, method="gradient", seed=3))
    assert np.array_equal(a.reduced.A, b.reduced.A)
    assert np.array_equal(a.reduced.B, b.reduced.B)
    assert a.h2_error == b.h2_error


def test_reduce_result_invariants(rng):
    orig = random_model(rng, 1, 2)
    res = reduce_model(orig, ReductionSpec(r=1, method="gradient", seed=1))
    assert res.report.passed
    assert is_hurwitz(res.reduced.A)
    assert res.diagnostics["thm2_residual"] >= 0
