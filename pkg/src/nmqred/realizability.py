"""
Physical-realizability conditions for augmented models.

A model describes a genuine (passive, directly coupled) quantum system
iff its coefficient matrices satisfy a set of algebraic conditions: the
two subsystems dissipate consistently with their noise couplings, the
cross coupling is the quadrature image of a real coupling matrix, and
the off-diagonal noise/output blocks vanish.  This module checks the
conditions in both the complex and the quadrature representation,
provides the realizable parameterization used by the optimizer, and a
Frobenius projection that repairs approximately-realizable models.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import block_diag

from .linalg import LinalgError, kron
from .model import ComplexQSDE, QuadratureModel

__all__ = [
    "RealizabilityReport",
    "MACHINE_TOL",
    "TRANSCRIBED_TOL",
    "check_complex",
    "check_quadrature",
    "extract_coupling",
    "nearest_tensor_block",
    "realizable_parameterization",
    "project_to_realizable",
]

# Default tolerance for models assembled in double precision.
MACHINE_TOL = 1e-8
# Tolerance for matrices transcribed from 4-decimal published tables.
TRANSCRIBED_TOL = 1.5e-2


@dataclass(frozen=True)
class RealizabilityReport:
    """Per-condition Frobenius residuals with pass flags at ``tol``."""

    residuals: dict[str, float]
    tol: float
    kg: NDArray | None = None

    @property
    def flags(self) -> dict[str, bool]:
        return {name: res <= self.tol for name, res in self.residuals.items()}

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    def to_dict(self) -> dict:
        out = {
            "tol": self.tol,
            "conditions": {
                name: {"residual": float(res), "pass": bool(res <= self.tol)}
                for name, res in self.residuals.items()
            },
            "pass": self.passed,
        }
        if self.kg is not None:
            out["coupling_matrix"] = [[float(v) for v in row] for row in self.kg]
        return out


def check_complex(q: ComplexQSDE, tol: float = MACHINE_TOL) -> RealizabilityReport:
    """Check the complex-form realizability conditions of a model.

    Reports residuals; never raises on a failing condition.
    """
    m = q.m
    mp = q.H.shape[0]
    F11, F12 = q.F[:m, :m], q.F[:m, m:]
    F21, F22 = q.F[m:, :m], q.F[m:, m:]
    G11, G12 = q.G[:m, :mp], q.G[:m, mp:]
    G22 = q.G[m:, mp:]
    H11, H12 = q.H[:, :m], q.H[:, m:]
    fro = np.linalg.norm
    residuals = {
        "principal_dissipation": fro(F11 + F11.conj().T + G11 @ G11.conj().T),
        "principal_output_pairing": fro(G11 + H11.conj().T),
        "ancillary_dissipation": fro(F22 + F22.conj().T + G22 @ G22.conj().T),
        "coupling_real": fro(F12 - F12.conj()),
        "coupling_skew": fro(F12 + F21.conj().T),
        "offdiag_zero": np.sqrt(fro(G12) ** 2 + fro(H12) ** 2),
    }
    return RealizabilityReport(
        residuals={k: float(v) for k, v in residuals.items()}, tol=tol
    )


def nearest_tensor_block(A12: NDArray) -> tuple[NDArray, float]:
    """Project onto the nearest matrix of the form beta ⊗ I_2.

    Returns (beta, residual): beta[i, j] is half the trace of the
    (i, j) 2x2 block; the residual is the Frobenius distance of A12 to
    beta ⊗ I_2 (orthogonal projection, so it is minimal).
    """
    rows, cols = A12.shape
    if rows % 2 or cols % 2:
        raise LinalgError("tensor projection needs even dimensions")
    blocks = A12.reshape(rows // 2, 2, cols // 2, 2)
    beta = 0.5 * (blocks[:, 0, :, 0] + blocks[:, 1, :, 1])
    residual = float(np.linalg.norm(A12 - kron(beta, np.eye(2))))
    return beta, residual


def extract_coupling(A12: NDArray) -> NDArray:
    """Coupling matrix beta with A12 ≈ beta ⊗ I_2."""
    return nearest_tensor_block(A12)[0]


def check_quadrature(mdl: QuadratureModel, tol: float = MACHINE_TOL) -> RealizabilityReport:
    """Check the quadrature-form realizability conditions of a model."""
    fro = np.linalg.norm
    kg, tensor_residual = nearest_tensor_block(mdl.A12)
    residuals = {
        "principal_dissipation": fro(mdl.A11 + mdl.A11.T + mdl.B11 @ mdl.B11.T),
        "principal_output_pairing": fro(mdl.B11 + mdl.C11.T),
        "ancillary_dissipation": fro(mdl.A22 + mdl.A22.T + mdl.B22 @ mdl.B22.T),
        "coupling_tensor": tensor_residual,
        "coupling_skew": fro(mdl.A12 + mdl.A21.T),
        "offdiag_zero": np.sqrt(fro(mdl.B12) ** 2 + fro(mdl.C12) ** 2),
    }
    return RealizabilityReport(
        residuals={k: float(v) for k, v in residuals.items()}, tol=tol, kg=kg
    )


def realizable_parameterization(
    theta_skew: NDArray,
    G22: NDArray,
    beta: NDArray,
    principal: QuadratureModel,
) -> QuadratureModel:
    """Build a realizable reduced-form model from free parameters.

    The ancillary block is A22 = theta_skew - G22 G22^T / 2 with noise
    coupling B22 = G22, the cross coupling is beta ⊗ I_2, and the
    principal blocks are copied from ``principal``.  The construction
    satisfies every quadrature realizability condition exactly.
    """
    theta_skew = np.asarray(theta_skew, dtype=float)
    G22 = np.asarray(G22, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.linalg.norm(theta_skew + theta_skew.T) > 1e-12 * max(
        1.0, np.linalg.norm(theta_skew)
    ):
        raise LinalgError("theta_skew must be antisymmetric")
    if theta_skew.shape[0] % 2 or theta_skew.shape[0] != theta_skew.shape[1]:
        raise LinalgError("theta_skew must be square with even dimension")
    r = theta_skew.shape[0] // 2
    m = principal.m
    if beta.shape != (m, r):
        raise LinalgError(f"beta must be {m}x{r}, got {beta.shape}")
    if G22.shape[0] != 2 * r or G22.shape[1] % 2:
        raise LinalgError(f"G22 must be {2 * r}x(2*n_in), got {G22.shape}")
    n_in = G22.shape[1] // 2

    A12 = kron(beta, np.eye(2))
    A22 = theta_skew - 0.5 * G22 @ G22.T
    A = np.block([[principal.A11, A12], [-A12.T, A22]])
    B = np.block(
        [
            [principal.B11, np.zeros((2 * m, 2 * n_in))],
            [np.zeros((2 * r, 2 * m)), G22],
        ]
    )
    C = np.hstack([-principal.B11.T, np.zeros((2 * m, 2 * r))])
    D = np.hstack([np.eye(2 * m), np.zeros((2 * m, 2 * n_in))])
    return QuadratureModel(
        A=A, B=B, C=C, D=D, m=m, k=r, n_in=n_in,
        sign_convention=principal.sign_convention,
    )


def project_to_realizable(mdl: QuadratureModel) -> QuadratureModel:
    """Frobenius-project a model onto the realizable set.

    Symmetric parts of the diagonal A-blocks are replaced by the
    dissipation implied by the corresponding noise blocks (which are
    trusted as given), the cross coupling is projected onto its nearest
    tensor structure, and the off-diagonal noise/output blocks are
    zeroed.  Idempotent; a realizable model is a fixed point.
    """
    m, k = mdl.m, mdl.k
    beta, _ = nearest_tensor_block(mdl.A12)
    A12 = kron(beta, np.eye(2))
    A11 = 0.5 * (mdl.A11 - mdl.A11.T) - 0.5 * mdl.B11 @ mdl.B11.T
    A22 = 0.5 * (mdl.A22 - mdl.A22.T) - 0.5 * mdl.B22 @ mdl.B22.T
    A = np.block([[A11, A12], [-A12.T, A22]])
    B = np.block(
        [
            [mdl.B11, np.zeros_like(mdl.B12)],
            [mdl.B21, mdl.B22],
        ]
    )
    C = np.hstack([-mdl.B11.T, np.zeros((2 * m, 2 * k))])
    return QuadratureModel(
        A=A, B=B, C=C, D=mdl.D.copy(), m=m, k=k, n_in=mdl.n_in,
        sign_convention=mdl.sign_convention, synthesized=mdl.synthesized,
    )
