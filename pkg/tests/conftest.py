"""Shared generators for randomized tests (all explicitly seeded)."""

from __future__ import annotations

import numpy as np
import pytest

from nmqred.model import PhysicalParams, build_complex, to_quadrature
from nmqred.reduction import ReducedParams, params_to_model


def random_params(rng: np.random.Generator, m: int, n: int) -> PhysicalParams:
    return PhysicalParams(
        m=m,
        n=n,
        omega_p=tuple(rng.uniform(2.0, 12.0, m)),
        omega_a=tuple(rng.uniform(2.0, 12.0, n)),
        gamma_p=tuple(rng.uniform(0.3, 1.5, m)),
        gamma_a=tuple(rng.uniform(0.3, 1.5, n)),
        kappa=tuple(rng.uniform(0.2, 1.6, m)),
    )


def random_model(rng: np.random.Generator, m: int, n: int):
    """Random realizable Hurwitz augmented model."""
    return to_quadrature(build_complex(random_params(rng, m, n)))


def random_reduced(rng: np.random.Generator, orig, r: int):
    """Random realizable reduced model for ``orig`` (Hurwitz by its
    full-rank noise block)."""
    d = 2 * r
    S = np.zeros((d, d))
    iu = np.triu_indices(d, 1)
    S[iu] = rng.uniform(2.0, 12.0, iu[0].size) * rng.choice([-1, 1], iu[0].size)
    S = S - S.T
    G22 = 0.4 * rng.standard_normal((d, 2 * orig.n_in)) + np.eye(d, 2 * orig.n_in)
    beta = 0.5 * rng.standard_normal((orig.m, r))
    params = ReducedParams(theta_skew=S, G22=G22, beta=beta)
    return params_to_model(orig, params), params


def random_hurwitz(rng: np.random.Generator, n: int) -> np.ndarray:
    """Random dense Hurwitz matrix (shifted to a safe stability margin)."""
    M = rng.standard_normal((n, n))
    shift = np.max(np.linalg.eigvals(M).real)
    return M - (shift + rng.uniform(0.2, 1.0)) * np.eye(n)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
