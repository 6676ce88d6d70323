"""
Error-system assembly, Gramians, H2 norms and frequency responses.

The reduction quality measure is the H2 norm of the difference between
the transfer functions of an original and a reduced model.  Stacking
the two models into one block-diagonal error system turns that norm
into a Lyapunov/Gramian trace, which is how everything here computes
it; a frequency-domain quadrature oracle lives in the test suite.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import block_diag

from .linalg import LinalgError, solve_lyapunov
from .model import QuadratureModel

__all__ = [
    "ErrorSystem",
    "GramianPair",
    "build_error_system",
    "error_gramians",
    "h2_norm_sq",
    "transfer_eval",
    "bode_data",
    "write_bode_csv",
    "default_omega_grid",
]


@dataclass(frozen=True)
class ErrorSystem:
    """Stacked (original, reduced) system whose output is y - y_r.

    A_hat = diag(A, A_r); B_hat stacks the input matrices after the
    reduced one is zero-padded to the original input count; C_hat is
    [C, -C_r].  The feedthrough difference cancels exactly, so the
    error map is strictly proper.
    """

    A_hat: NDArray
    B_hat: NDArray
    C_hat: NDArray
    m: int
    n: int
    r: int

    @property
    def n_orig(self) -> int:
        return 2 * (self.m + self.n)

    @property
    def n_red(self) -> int:
        return 2 * (self.m + self.r)


class GramianPair:
    """Controllability/observability Gramians of an error system.

    Exposes the block views used by the reconstruction formulas: for
    Q = [[Q1, Q2], [Q2^T, Q3]] partitioned at the original state count,
    Q2's inner blocks split at (2m principal | 2k ancillary) rows and
    columns, e.g. ``Q222`` is the ancillary-by-ancillary corner.
    """

    def __init__(self, P: NDArray, Q: NDArray, m: int, n: int, r: int):
        self.P = P
        self.Q = Q
        self.m, self.n, self.r = m, n, r
        self._no = 2 * (m + n)
        self._mp = 2 * m

    def _split(self, M: NDArray, which: str) -> NDArray:
        no, mp = self._no, self._mp
        M1, M2, M3 = M[:no, :no], M[:no, no:], M[no:, no:]
        inner = {
            "1": M1,
            "2": M2,
            "3": M3,
            "211": M2[:mp, :mp],
            "212": M2[:mp, mp:],
            "221": M2[mp:, :mp],
            "222": M2[mp:, mp:],
            "311": M3[:mp, :mp],
            "312": M3[:mp, mp:],
            "322": M3[mp:, mp:],
        }
        return inner[which]

    def __getattr__(self, name: str) -> NDArray:
        if len(name) >= 2 and name[0] in "PQ" and name[1:] in {
            "1", "2", "3", "211", "212", "221", "222", "311", "312", "322",
        }:
            return self._split(self.P if name[0] == "P" else self.Q, name[1:])
        raise AttributeError(name)


def build_error_system(orig: QuadratureModel, red: QuadratureModel) -> ErrorSystem:
    """Stack an original and a reduced model into the error system."""
    if orig.m != red.m:
        raise LinalgError(
            f"principal dimensions differ: {orig.m} vs {red.m}"
        )
    if red.n_inputs > orig.n_inputs:
        raise LinalgError("reduced model has more inputs than the original")
    pad = orig.n_inputs - red.n_inputs
    B_red = np.hstack([red.B, np.zeros((red.n_states, pad))])
    D_red = np.hstack([red.D, np.zeros((red.D.shape[0], pad))])
    if np.linalg.norm(orig.D - D_red) > 0:
        raise LinalgError("feedthrough terms do not cancel after padding")
    return ErrorSystem(
        A_hat=block_diag(orig.A, red.A),
        B_hat=np.vstack([orig.B, B_red]),
        C_hat=np.hstack([orig.C, -red.C]),
        m=orig.m,
        n=orig.k,
        r=red.k,
    )


def error_gramians(es: ErrorSystem) -> GramianPair:
    """Solve both Lyapunov equations of the error system.

    Raises :class:`~nmqred.linalg.NotHurwitzError` when the stacked
    system is not asymptotically stable.
    """
    P = solve_lyapunov(es.A_hat, es.B_hat @ es.B_hat.T)
    Q = solve_lyapunov(es.A_hat.T, es.C_hat.T @ es.C_hat)
    return GramianPair(P=P, Q=Q, m=es.m, n=es.n, r=es.r)


def h2_norm_sq(es: ErrorSystem, gramians: GramianPair | None = None,
               check_rel: float = 1e-8) -> float:
    """Squared H2 norm of the error transfer function.

    Computed as tr(C_hat P C_hat^T) and cross-checked against
    tr(B_hat^T Q B_hat); the two traces must agree to ``check_rel``
    relative accuracy.
    """
    g = gramians if gramians is not None else error_gramians(es)
    j_p = float(np.trace(es.C_hat @ g.P @ es.C_hat.T))
    j_q = float(np.trace(es.B_hat.T @ g.Q @ es.B_hat))
    scale = max(abs(j_p), abs(j_q), 1e-300)
    if abs(j_p - j_q) > check_rel * scale and scale > 1e-14:
        raise LinalgError(
            f"Gramian trace formulas disagree: {j_p:.12e} vs {j_q:.12e}"
        )
    return j_p


def transfer_eval(mdl: QuadratureModel, s: complex) -> NDArray:
    """Transfer function C (sI - A)^{-1} B + D at a complex point."""
    n = mdl.n_states
    M = s * np.eye(n) - mdl.A
    try:
        X = np.linalg.solve(M, mdl.B)
    except np.linalg.LinAlgError as exc:
        raise LinalgError(f"resolvent singular at s = {s}") from exc
    if not np.all(np.isfinite(X)):
        raise LinalgError(f"resolvent singular at s = {s}")
    return mdl.C @ X + mdl.D


def default_omega_grid(lo: float = 1e-2, hi: float = 1e3, points: int = 400) -> NDArray:
    """Log-spaced frequency grid in rad/ns bracketing the example's poles."""
    return np.logspace(np.log10(lo), np.log10(hi), points)


def bode_data(mdl: QuadratureModel, omega_grid: NDArray) -> NDArray:
    """Frequency response table over a grid of positive frequencies.

    Returns a structured array with fields (omega, in_idx, out_idx,
    mag_db, phase_deg); rows are ordered omega-major, then output, then
    input.  Phase is unwrapped per channel, seeded at the lowest grid
    point.
    """
    omega_grid = np.asarray(omega_grid, dtype=float)
    if omega_grid.size == 0 or np.any(omega_grid <= 0) or not np.all(
        np.isfinite(omega_grid)
    ):
        raise LinalgError("omega grid must be finite and positive")
    n_out, n_in = mdl.C.shape[0], mdl.n_inputs
    resp = np.empty((omega_grid.size, n_out, n_in), dtype=complex)
    for i, w in enumerate(omega_grid):
        resp[i] = transfer_eval(mdl, 1j * w)
    mag_db = 20.0 * np.log10(np.maximum(np.abs(resp), 1e-300))
    phase_deg = np.degrees(np.unwrap(np.angle(resp), axis=0))

    dtype = [
        ("omega", float),
        ("in_idx", int),
        ("out_idx", int),
        ("mag_db", float),
        ("phase_deg", float),
    ]
    table = np.empty(omega_grid.size * n_out * n_in, dtype=dtype)
    pos = 0
    for i, w in enumerate(omega_grid):
        for out in range(n_out):
            for inp in range(n_in):
                table[pos] = (w, inp, out, mag_db[i, out, inp], phase_deg[i, out, inp])
                pos += 1
    return table


def write_bode_csv(path, table: NDArray, delta_mag_db: NDArray | None = None) -> None:
    """Write a bode table as CSV; optionally append a delta-magnitude column."""
    headers = ["omega", "in_idx", "out_idx", "mag_db", "phase_deg"]
    if delta_mag_db is not None:
        headers.append("delta_mag_db")
        if len(delta_mag_db) != len(table):
            raise LinalgError("delta column length does not match table")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        for i, row in enumerate(table):
            rec = [
                repr(float(row["omega"])),
                int(row["in_idx"]),
                int(row["out_idx"]),
                repr(float(row["mag_db"])),
                repr(float(row["phase_deg"])),
            ]
            if delta_mag_db is not None:
                rec.append(repr(float(delta_mag_db[i])))
            writer.writerow(rec)
