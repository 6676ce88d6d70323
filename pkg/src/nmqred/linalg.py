"""
Dense linear-algebra kernels shared by the whole package.

Everything here operates on plain numpy arrays: real matrices are
float64 ndarrays, complex matrices are complex128 ndarrays.  The
routines wrap LAPACK (via scipy) where a mature kernel exists and add
the contract checks the rest of the package relies on: finiteness,
symmetry, Hurwitz preconditions, residual bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
import scipy.linalg as spla

__all__ = [
    "BlockSpec",
    "LinalgError",
    "NotHurwitzError",
    "real_schur",
    "eigenvalues",
    "spectral_abscissa",
    "is_hurwitz",
    "solve_lyapunov",
    "kron",
    "is_psd",
    "check_finite",
    "symmetrize",
]

# Margin used by the strict Hurwitz test; guards Gramian existence
# against rounding in borderline-stable systems.
HURWITZ_MARGIN = 1e-9


class LinalgError(ValueError):
    """A matrix argument violates a kernel precondition."""


class NotHurwitzError(LinalgError):
    """Raised when a Lyapunov/Gramian call receives a non-Hurwitz matrix."""

    def __init__(self, abscissa: float):
        self.abscissa = abscissa
        super().__init__(
            f"matrix is not Hurwitz: spectral abscissa {abscissa:.6e} "
            f">= -{HURWITZ_MARGIN:g}"
        )


@dataclass(frozen=True)
class BlockSpec:
    """Row/column cut points describing a block partition of a matrix.

    Cut points are interior boundaries, strictly increasing and bounded
    by the matrix dimensions, e.g. ``BlockSpec((4,), (4,))`` splits a
    10x10 matrix into a 2x2 grid of blocks of sizes (4, 6).
    """

    row_cuts: tuple[int, ...]
    col_cuts: tuple[int, ...]

    def __post_init__(self):
        for cuts in (self.row_cuts, self.col_cuts):
            if any(c <= 0 for c in cuts) or any(
                b <= a for a, b in zip(cuts, cuts[1:])
            ):
                raise LinalgError(f"cut points must be strictly increasing: {cuts}")

    def validate(self, M: NDArray) -> None:
        if self.row_cuts and self.row_cuts[-1] >= M.shape[0]:
            raise LinalgError("row cuts exceed matrix dimension")
        if self.col_cuts and self.col_cuts[-1] >= M.shape[1]:
            raise LinalgError("column cuts exceed matrix dimension")

    def blocks(self, M: NDArray) -> list[list[NDArray]]:
        """Return the grid of sub-blocks of ``M`` under this partition."""
        self.validate(M)
        rs = [0, *self.row_cuts, M.shape[0]]
        cs = [0, *self.col_cuts, M.shape[1]]
        return [
            [M[rs[i]: rs[i + 1], cs[j]: cs[j + 1]] for j in range(len(cs) - 1)]
            for i in range(len(rs) - 1)
        ]


def check_finite(M: NDArray, name: str = "matrix") -> NDArray:
    M = np.asarray(M)
    if not np.all(np.isfinite(M.view(float) if np.iscomplexobj(M) else M)):
        raise LinalgError(f"{name} contains NaN or Inf entries")
    return M


def symmetrize(M: NDArray) -> NDArray:
    return 0.5 * (M + M.T)


def real_schur(M: NDArray) -> tuple[NDArray, NDArray]:
    """Real Schur decomposition M = Q T Q^T.

    Q is orthogonal and T quasi-upper-triangular with 1x1/2x2 blocks on
    the diagonal.  Raises :class:`LinalgError` on non-square input or if
    the QR iteration fails to converge.
    """
    M = check_finite(np.asarray(M, dtype=float))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise LinalgError(f"real_schur needs a square matrix, got {M.shape}")
    try:
        T, Q = spla.schur(M, output="real")
    except spla.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise LinalgError(f"Schur iteration did not converge: {exc}") from exc
    return Q, T


def eigenvalues(M: NDArray) -> NDArray:
    """Eigenvalues of a real square matrix from its Schur form.

    Returned sorted by (real part, imaginary part) so results are
    deterministic across calls and platforms.
    """
    _, T = real_schur(M)
    vals = _quasi_triangular_eigenvalues(T)
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]


def _quasi_triangular_eigenvalues(T: NDArray) -> NDArray:
    n = T.shape[0]
    vals = np.empty(n, dtype=complex)
    i = 0
    while i < n:
        if i + 1 < n and abs(T[i + 1, i]) > 0.0:
            a, b = T[i, i], T[i, i + 1]
            c, d = T[i + 1, i], T[i + 1, i + 1]
            tr = a + d
            det = a * d - b * c
            disc = tr * tr / 4.0 - det
            if disc >= 0:
                root = np.sqrt(disc)
                vals[i] = tr / 2.0 + root
                vals[i + 1] = tr / 2.0 - root
            else:
                root = np.sqrt(-disc)
                vals[i] = tr / 2.0 + 1j * root
                vals[i + 1] = tr / 2.0 - 1j * root
            i += 2
        else:
            vals[i] = T[i, i]
            i += 1
    return vals


def spectral_abscissa(M: NDArray) -> float:
    """Largest real part over the spectrum of M."""
    return float(np.max(eigenvalues(M).real))


def is_hurwitz(M: NDArray, margin: float = HURWITZ_MARGIN) -> bool:
    return spectral_abscissa(M) < -margin


def solve_lyapunov(A: NDArray, RHS: NDArray) -> NDArray:
    """Solve A X + X A^T + RHS = 0 for symmetric X.

    A must be Hurwitz and RHS symmetric of matching size.  The solve
    goes through the real-Schur reduction with back-substitution
    (Bartels-Stewart, LAPACK *trsyl); the result is explicitly
    symmetrized.  The observability-type equation A^T Q + Q A + C^T C = 0
    is obtained by passing A^T.
    """
    A = check_finite(np.asarray(A, dtype=float), "A")
    RHS = check_finite(np.asarray(RHS, dtype=float), "RHS")
    if A.shape[0] != A.shape[1]:
        raise LinalgError(f"A must be square, got {A.shape}")
    if RHS.shape != A.shape:
        raise LinalgError(f"dimension mismatch: A is {A.shape}, RHS is {RHS.shape}")
    if np.linalg.norm(RHS - RHS.T) > 1e-10 * max(1.0, np.linalg.norm(RHS)):
        raise LinalgError("RHS must be symmetric")
    alpha = spectral_abscissa(A)
    if alpha >= -HURWITZ_MARGIN:
        raise NotHurwitzError(alpha)
    X = spla.solve_continuous_lyapunov(A, -RHS)
    return symmetrize(X)


def kron(left: NDArray, right: NDArray) -> NDArray:
    """Kronecker product; (left ⊗ right)[ip+k, jq+l] = left[i,j] right[k,l]."""
    return np.kron(np.asarray(left), np.asarray(right))


def is_psd(M: NDArray, tol: float = 1e-10) -> bool:
    """True iff M is symmetric within tol and min eigenvalue >= -tol."""
    M = check_finite(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise LinalgError(f"is_psd needs a square matrix, got {M.shape}")
    asym = np.linalg.norm(M - M.T)
    if asym > tol * max(1.0, np.linalg.norm(M)):
        raise LinalgError(f"matrix is asymmetric beyond tolerance: {asym:.3e}")
    w = np.linalg.eigvalsh(symmetrize(M))
    return bool(w[0] >= -tol)
