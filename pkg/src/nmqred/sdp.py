"""
Self-contained conic solver for the package's semidefinite programs.

Problems are declared as named variables (scalars, symmetric matrix
blocks with optional PSD flags, rectangular blocks), affine matrix
equalities and LMIs.  ``compile`` lowers everything to the standard
primal form  min c'x  s.t.  Ax = b, x in K,  where K is a product of a
nonnegative orthant and dense PSD cones (free variables are split into
differences of nonnegative parts).  The solver is a primal-dual
interior-point method with Nesterov-Todd scaling and a Mehrotra
predictor-corrector step on the homogeneous self-dual embedding, so it
detects infeasibility and unboundedness via Farkas-type certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
import scipy.sparse as sp
import scipy.linalg as spla

__all__ = [
    "ConicProblem",
    "MatExpr",
    "SolveStatus",
    "SolverOptions",
    "SdpError",
    "InfeasibleError",
    "svec",
    "smat",
    "svec_dim",
    "solve",
    "feasibility_phase",
    "residuals",
]

_SQRT2 = math.sqrt(2.0)


class SdpError(RuntimeError):
    """Problem construction or solver failure."""


class InfeasibleError(SdpError):
    """Raised by the feasibility phase; carries a violation certificate."""

    def __init__(self, message: str, certificate: dict):
        super().__init__(message)
        self.certificate = certificate


# ---------------------------------------------------------------------------
# svec utilities (isometric symmetric vectorization, row-major triangle)

_TRI_CACHE: dict[int, tuple[NDArray, NDArray, NDArray]] = {}


def _tri(d: int):
    cached = _TRI_CACHE.get(d)
    if cached is None:
        rows, cols = np.triu_indices(d)
        scale = np.where(rows == cols, 1.0, _SQRT2)
        cached = (rows, cols, scale)
        _TRI_CACHE[d] = cached
    return cached


def svec_dim(d: int) -> int:
    return d * (d + 1) // 2


def svec(M: NDArray) -> NDArray:
    rows, cols, scale = _tri(M.shape[0])
    return M[rows, cols] * scale


def smat(v: NDArray, d: int) -> NDArray:
    rows, cols, scale = _tri(d)
    M = np.zeros((d, d))
    M[rows, cols] = v / scale
    M = M + M.T
    M[np.diag_indices(d)] *= 0.5
    return M


def _svec_selector(d: int) -> sp.csr_matrix:
    """Sparse map from row-major vec(M) of a symmetric M to svec(M)."""
    rows, cols, scale = _tri(d)
    n = rows.size
    out_rows = np.concatenate([np.arange(n), np.arange(n)])
    in_cols = np.concatenate([rows * d + cols, cols * d + rows])
    vals = np.concatenate([scale / 2.0, scale / 2.0])
    # duplicate (row, col) pairs on the diagonal sum to the full weight
    return sp.csr_matrix((vals, (out_rows, in_cols)), shape=(n, d * d))


def _duplication(d: int) -> sp.csr_matrix:
    """Sparse map from svec(M) to row-major vec(M)."""
    rows, cols, scale = _tri(d)
    n = rows.size
    off = rows != cols
    out_rows = np.concatenate([rows * d + cols, cols[off] * d + rows[off]])
    in_cols = np.concatenate([np.arange(n), np.arange(n)[off]])
    vals = np.concatenate([1.0 / scale, 1.0 / scale[off]])
    return sp.csr_matrix((vals, (out_rows, in_cols)), shape=(d * d, n))


def _transpose_perm(rows: int, cols: int) -> sp.csr_matrix:
    """Permutation with P @ vec_rm(M) = vec_rm(M^T) for an rows-x-cols M."""
    idx = np.arange(rows * cols).reshape(rows, cols).T.ravel()
    return sp.csr_matrix(
        (np.ones(rows * cols), (np.arange(rows * cols), idx)),
        shape=(rows * cols, rows * cols),
    )


# ---------------------------------------------------------------------------
# Problem declaration

@dataclass
class _Var:
    name: str
    kind: str          # "scalar" | "sym" | "rect"
    rows: int
    cols: int
    psd: bool          # PSD cone membership (sym) / nonnegativity (scalar)

    @property
    def size(self) -> int:
        if self.kind == "sym":
            return svec_dim(self.rows)
        return self.rows * self.cols


@dataclass
class _Term:
    var: str
    L: NDArray | None
    R: NDArray | None
    transpose: bool = False
    scalar_coeff: NDArray | None = None
    frob_coeff: NDArray | None = None


class MatExpr:
    """Affine matrix expression  sum_k L_k X_k(^T) R_k + const."""

    def __init__(self, shape: tuple[int, int], const: NDArray | None = None):
        self.shape = tuple(shape)
        self.const = (
            np.zeros(self.shape) if const is None
            else np.array(const, dtype=float)
        )
        if self.const.shape != self.shape:
            raise SdpError(f"constant must have shape {self.shape}")
        self.terms: list[_Term] = []

    def add(self, var: str, L: NDArray | None = None, R: NDArray | None = None,
            transpose: bool = False) -> "MatExpr":
        L = None if L is None else np.array(L, dtype=float)
        R = None if R is None else np.array(R, dtype=float)
        self.terms.append(_Term(var=var, L=L, R=R, transpose=transpose))
        return self

    def add_scalar(self, var: str, M: NDArray) -> "MatExpr":
        """Term  x * M  for a scalar variable x."""
        M = np.array(M, dtype=float).reshape(self.shape)
        self.terms.append(_Term(var=var, L=None, R=None, scalar_coeff=M))
        return self

    def add_frob(self, var: str, C: NDArray) -> "MatExpr":
        """Term  <C, X> * [[1]]  on a 1x1 expression (e.g. tr(L X R) with
        C = (R L)^T)."""
        if self.shape != (1, 1):
            raise SdpError("frobenius terms require a 1x1 expression")
        self.terms.append(
            _Term(var=var, L=None, R=None, frob_coeff=np.array(C, dtype=float))
        )
        return self


class ConicProblem:
    """Conic program over named variables.

    Constraints are affine matrix equalities (``expr == 0``) and LMIs:
    ``sense='>='`` means expr >= margin*I, ``sense='<='`` means
    expr <= -margin*I (margin is the distance into the cone).  The
    objective is a linear functional of the variables, minimized.
    """

    def __init__(self):
        self.variables: dict[str, _Var] = {}
        self.equalities: list[tuple[MatExpr, bool]] = []
        self.lmis: list[tuple[MatExpr, str, float]] = []
        self.objective: dict[str, NDArray] = {}
        self._compiled = None

    # -- declaration -------------------------------------------------------
    def add_scalar(self, name: str, nonneg: bool = False) -> str:
        self._add(_Var(name, "scalar", 1, 1, psd=nonneg))
        return name

    def add_symmetric(self, name: str, dim: int, psd: bool = False) -> str:
        self._add(_Var(name, "sym", dim, dim, psd=psd))
        return name

    def add_rect(self, name: str, rows: int, cols: int) -> str:
        self._add(_Var(name, "rect", rows, cols, psd=False))
        return name

    def _add(self, var: _Var) -> None:
        if var.name in self.variables:
            raise SdpError(f"duplicate variable {var.name!r}")
        self.variables[var.name] = var
        self._compiled = None

    def expr(self, shape: tuple[int, int], const: NDArray | None = None) -> MatExpr:
        return MatExpr(shape, const)

    def add_equality(self, expr: MatExpr, symmetric: bool = False) -> None:
        """Constrain expr == 0; set ``symmetric`` when the expression is
        symmetric by construction so only the upper triangle is emitted."""
        self.equalities.append((expr, symmetric))
        self._compiled = None

    def add_lmi(self, expr: MatExpr, sense: str = ">=", margin: float = 0.0) -> None:
        if sense not in (">=", "<="):
            raise SdpError("LMI sense must be '>=' or '<='")
        if expr.shape[0] != expr.shape[1]:
            raise SdpError("LMI expression must be square")
        self.lmis.append((expr, sense, margin))
        self._compiled = None

    def set_objective(self, coeffs: dict[str, NDArray | float]) -> None:
        """Minimize sum_v <coeff_v, X_v>; scalar variables take floats."""
        self.objective = {k: np.asarray(v, dtype=float) for k, v in coeffs.items()}
        self._compiled = None

    # -- compilation -------------------------------------------------------
    def compile(self):
        """Lower to (c, A, b, cone, storage, placements) standard form."""
        if self._compiled is not None:
            return self._compiled

        nonneg = 0
        placements: dict[str, tuple[str, int]] = {}
        for var in self.variables.values():
            if var.kind == "sym" and var.psd:
                continue
            if var.kind == "scalar" and var.psd:
                placements[var.name] = ("nonneg", nonneg)
                nonneg += 1
            else:
                placements[var.name] = ("split", nonneg)
                nonneg += 2 * var.size
        psd_dims: list[int] = []
        off = nonneg
        for var in self.variables.values():
            if var.kind == "sym" and var.psd:
                placements[var.name] = ("psd", off)
                psd_dims.append(var.rows)
                off += var.size
        slack_offsets = []
        for expr, _, _ in self.lmis:
            slack_offsets.append(off)
            psd_dims.append(expr.shape[0])
            off += svec_dim(expr.shape[0])
        nx = off

        storage: dict[str, sp.csr_matrix] = {}
        for var in self.variables.values():
            kind, pos = placements[var.name]
            nv = var.rows * var.cols
            if kind == "psd":
                P = sp.csr_matrix(
                    (np.ones(var.size),
                     (np.arange(var.size), np.arange(pos, pos + var.size))),
                    shape=(var.size, nx),
                )
                storage[var.name] = (_duplication(var.rows) @ P).tocsr()
            elif kind == "nonneg":
                storage[var.name] = sp.csr_matrix(
                    ([1.0], ([0], [pos])), shape=(1, nx)
                )
            else:  # split free variable
                size = var.size
                data = np.tile([1.0, -1.0], size)
                rows_i = np.repeat(np.arange(size), 2)
                cols_i = np.empty(2 * size, dtype=int)
                cols_i[0::2] = pos + 2 * np.arange(size)
                cols_i[1::2] = pos + 2 * np.arange(size) + 1
                P = sp.csr_matrix((data, (rows_i, cols_i)), shape=(size, nx))
                if var.kind == "sym":
                    P = (_duplication(var.rows) @ P).tocsr()
                storage[var.name] = P

        def expr_rows(expr: MatExpr) -> tuple[sp.csr_matrix, NDArray]:
            p, q = expr.shape
            M = sp.csr_matrix((p * q, nx))
            for term in expr.terms:
                var = self.variables[term.var]
                if term.scalar_coeff is not None:
                    M = M + (
                        sp.csr_matrix(term.scalar_coeff.reshape(-1, 1))
                        @ storage[term.var]
                    )
                    continue
                if term.frob_coeff is not None:
                    if term.frob_coeff.shape != (var.rows, var.cols):
                        raise SdpError(
                            f"frobenius coefficient for {term.var} must be "
                            f"{var.rows}x{var.cols}"
                        )
                    M = M + (
                        sp.csr_matrix(term.frob_coeff.reshape(1, -1))
                        @ storage[term.var]
                    )
                    continue
                r, c = var.rows, var.cols
                if term.transpose:
                    r, c = c, r
                L = np.eye(p, r) if term.L is None else term.L
                R = np.eye(c, q) if term.R is None else term.R
                if L.shape != (p, r) or R.shape != (c, q):
                    raise SdpError(
                        f"term {term.var}: L{L.shape}/R{R.shape} do not map "
                        f"({r},{c}) into {expr.shape}"
                    )
                op = sp.kron(sp.csr_matrix(L), sp.csr_matrix(R.T), format="csr")
                vecmap = storage[term.var]
                if term.transpose:
                    vecmap = (_transpose_perm(var.rows, var.cols) @ vecmap).tocsr()
                M = M + op @ vecmap
            return M.tocsr(), expr.const.reshape(-1)

        A_rows: list[sp.csr_matrix] = []
        b_parts: list[NDArray] = []
        for expr, symmetric in self.equalities:
            M, const = expr_rows(expr)
            if symmetric:
                sel = _svec_selector(expr.shape[0])
                M = (sel @ M).tocsr()
                const = sel @ const
            A_rows.append(M)
            b_parts.append(-const)
        for (expr, sense, margin), off_s in zip(self.lmis, slack_offsets):
            d = expr.shape[0]
            M, const = expr_rows(expr)
            sel = _svec_selector(d)
            sign = 1.0 if sense == ">=" else -1.0
            Ms = (sel @ (sign * M)).tocsr()
            cs = sel @ (sign * const) - margin * svec(np.eye(d))
            nsv = svec_dim(d)
            S_map = sp.csr_matrix(
                (np.ones(nsv), (np.arange(nsv), np.arange(off_s, off_s + nsv))),
                shape=(nsv, nx),
            )
            A_rows.append((Ms - S_map).tocsr())
            b_parts.append(-cs)

        A = sp.vstack(A_rows, format="csr") if A_rows else sp.csr_matrix((0, nx))
        b = np.concatenate(b_parts) if b_parts else np.zeros(0)

        c = np.zeros(nx)
        for name, coeff in self.objective.items():
            c = c + storage[name].T @ np.asarray(coeff, dtype=float).reshape(-1)

        cone = _Cone(nonneg=nonneg, psd_dims=tuple(psd_dims))
        self._compiled = (c, A, b, cone, storage, placements)
        return self._compiled

    def unpack(self, x: NDArray) -> dict[str, NDArray | float]:
        _, _, _, _, storage, _ = self.compile()
        out: dict[str, NDArray | float] = {}
        for name, var in self.variables.items():
            flat = storage[name] @ x
            if var.kind == "scalar":
                out[name] = float(flat[0])
            else:
                out[name] = flat.reshape(var.rows, var.cols)
        return out


# ---------------------------------------------------------------------------
# Cone algebra

@dataclass(frozen=True)
class _Cone:
    nonneg: int
    psd_dims: tuple[int, ...]

    @property
    def dim(self) -> int:
        return self.nonneg + sum(svec_dim(d) for d in self.psd_dims)

    @property
    def degree(self) -> int:
        return self.nonneg + sum(self.psd_dims)

    def blocks(self):
        off = self.nonneg
        for d in self.psd_dims:
            yield d, slice(off, off + svec_dim(d))
            off += svec_dim(d)

    def identity(self) -> NDArray:
        e = np.zeros(self.dim)
        e[: self.nonneg] = 1.0
        for d, sl in self.blocks():
            e[sl] = svec(np.eye(d))
        return e


class _Scaling:
    """Nesterov-Todd scaling at an interior pair (x, s).

    Per PSD block, W = R R^T satisfies W s W = x (as matrices) and the
    scaled point R^{-1} X R^{-T} = R^T S R = diag(lambda) is shared.
    """

    def __init__(self, cone: _Cone, x: NDArray, s: NDArray):
        self.cone = cone
        nn = cone.nonneg
        self.w_nn = np.sqrt(x[:nn] / s[:nn]) if nn else np.zeros(0)
        self.lam_nn = np.sqrt(x[:nn] * s[:nn]) if nn else np.zeros(0)
        self.R: list[NDArray] = []
        self.Rinv: list[NDArray] = []
        self.lam: list[NDArray] = []
        for d, sl in cone.blocks():
            X = smat(x[sl], d)
            S = smat(s[sl], d)
            Lx = np.linalg.cholesky(X)
            Ls = np.linalg.cholesky(S)
            U, sig, Vt = np.linalg.svd(Ls.T @ Lx)
            R = Lx @ Vt.T * (sig ** -0.5)[None, :]
            self.R.append(R)
            self.Rinv.append(np.linalg.inv(R))
            self.lam.append(sig)

    def _blockwise(self, u, fn_nn, fn_psd) -> NDArray:
        out = u.copy()
        nn = self.cone.nonneg
        out[:nn] = fn_nn(u[:nn])
        for i, (d, sl) in enumerate(self.cone.blocks()):
            out[sl] = svec(fn_psd(i, smat(u[sl], d)))
        return out

    def scale_x(self, u: NDArray) -> NDArray:
        return self._blockwise(
            u, lambda v: v / self.w_nn,
            lambda i, M: self.Rinv[i] @ M @ self.Rinv[i].T,
        )

    def scale_s(self, u: NDArray) -> NDArray:
        return self._blockwise(
            u, lambda v: v * self.w_nn,
            lambda i, M: self.R[i].T @ M @ self.R[i],
        )

    def unscale_x(self, u: NDArray) -> NDArray:
        return self._blockwise(
            u, lambda v: v * self.w_nn,
            lambda i, M: self.R[i] @ M @ self.R[i].T,
        )

    def unscale_s(self, u: NDArray) -> NDArray:
        return self._blockwise(
            u, lambda v: v / self.w_nn,
            lambda i, M: self.Rinv[i].T @ M @ self.Rinv[i],
        )

    def apply_H(self, u: NDArray) -> NDArray:
        """H = W (x)_s W with W = R R^T, blockwise svec(W mat(u) W)."""
        def psd(i, M):
            W = self.R[i] @ self.R[i].T
            return W @ M @ W

        return self._blockwise(u, lambda v: v * self.w_nn ** 2, psd)

    def lambda_vec(self) -> NDArray:
        out = np.zeros(self.cone.dim)
        out[: self.cone.nonneg] = self.lam_nn
        for i, (d, sl) in enumerate(self.cone.blocks()):
            out[sl] = svec(np.diag(self.lam[i]))
        return out

    def jordan_solve(self, rhs: NDArray) -> NDArray:
        """Solve lambda o u = rhs in scaled coordinates."""
        out = rhs.copy()
        nn = self.cone.nonneg
        out[:nn] = rhs[:nn] / self.lam_nn
        for i, (d, sl) in enumerate(self.cone.blocks()):
            sig = self.lam[i]
            denom = 0.5 * (sig[:, None] + sig[None, :])
            out[sl] = svec(smat(rhs[sl], d) / denom)
        return out


def _jordan_product(cone: _Cone, u: NDArray, v: NDArray) -> NDArray:
    out = np.zeros(cone.dim)
    nn = cone.nonneg
    out[:nn] = u[:nn] * v[:nn]
    for d, sl in cone.blocks():
        U, V = smat(u[sl], d), smat(v[sl], d)
        out[sl] = svec(0.5 * (U @ V + V @ U))
    return out


def _max_step(cone: _Cone, z: NDArray, dz: NDArray) -> float:
    """sup {alpha : z + alpha dz in K} for z strictly interior."""
    alpha = np.inf
    nn = cone.nonneg
    neg = dz[:nn] < 0
    if np.any(neg):
        alpha = min(alpha, float(np.min(-z[:nn][neg] / dz[:nn][neg])))
    for d, sl in cone.blocks():
        Z = smat(z[sl], d)
        dZ = smat(dz[sl], d)
        L = np.linalg.cholesky(Z)
        M = spla.solve_triangular(L, dZ, lower=True, check_finite=False)
        M = spla.solve_triangular(L, M.T, lower=True, check_finite=False)
        lam_min = float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
        if lam_min < 0:
            alpha = min(alpha, -1.0 / lam_min)
    return alpha


# ---------------------------------------------------------------------------
# Schur complement assembly

def _schur_matrix(A: sp.csr_matrix, scaling: _Scaling) -> NDArray:
    """Dense A H A^T for the current scaling.

    PSD-block rows with few nonzeros expand W mat(a_i) W as a sum of
    outer products of columns of W, which keeps the assembly O(nnz d^2)
    instead of O(d^3) per row.
    """
    m = A.shape[0]
    cone = scaling.cone
    nn = cone.nonneg
    S = np.zeros((m, m))
    if nn:
        Ann = A[:, :nn].tocsc()
        w2 = scaling.w_nn ** 2
        S += np.asarray((Ann.multiply(w2[None, :]) @ Ann.T).todense())
    for i, (d, sl) in enumerate(cone.blocks()):
        Ab = A[:, sl].tocsr()
        support = np.flatnonzero(np.diff(Ab.indptr))
        if support.size == 0:
            continue
        rows_tri, cols_tri, scale_tri = _tri(d)
        W = scaling.R[i] @ scaling.R[i].T
        nsv = svec_dim(d)
        Y = np.empty((support.size, nsv))
        for k, row in enumerate(support):
            lo, hi = Ab.indptr[row], Ab.indptr[row + 1]
            idx = Ab.indices[lo:hi]
            vals = Ab.data[lo:hi]
            if idx.size <= 48:
                ii = rows_tri[idx]
                jj = cols_tri[idx]
                gamma = np.where(ii == jj, 0.5 * vals, vals / _SQRT2)
                U = W[:, ii] * gamma[None, :]
                V = W[:, jj]
                WMW = U @ V.T
                WMW = WMW + WMW.T
            else:
                Mrow = smat_from_coords(idx, vals, d)
                WMW = W @ Mrow @ W
            Y[k] = svec(WMW)
        Ssub = np.asarray((Ab[support] @ Y.T))
        S[np.ix_(support, support)] += Ssub
    return S


def smat_from_coords(idx: NDArray, vals: NDArray, d: int) -> NDArray:
    v = np.zeros(svec_dim(d))
    v[idx] = vals
    return smat(v, d)


class _SchurSolver:
    def __init__(self, S: NDArray):
        self.n = S.shape[0]
        scale = float(np.max(np.abs(np.diag(S)))) if self.n else 1.0
        reg = 1e-13 * max(scale, 1.0)
        last_exc: Exception | None = None
        for _ in range(8):
            try:
                self.cho = spla.cho_factor(
                    S + reg * np.eye(self.n), lower=True, check_finite=False
                )
                self.S = S
                return
            except np.linalg.LinAlgError as exc:
                last_exc = exc
                reg *= 100.0
        raise SdpError(f"Schur complement factorization failed: {last_exc}")

    def solve(self, rhs: NDArray) -> NDArray:
        x = spla.cho_solve(self.cho, rhs, check_finite=False)
        x += spla.cho_solve(self.cho, rhs - self.S @ x, check_finite=False)
        return x


# ---------------------------------------------------------------------------
# Interior-point solver on the homogeneous self-dual embedding

@dataclass
class SolveStatus:
    status: str
    objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "objective": self.objective,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "gap": self.gap,
            "iterations": self.iterations,
        }


@dataclass
class SolverOptions:
    tol: float = 1e-7
    max_iter: int = 100
    step_fraction: float = 0.99


def _conelp(c: NDArray, A: sp.csr_matrix, b: NDArray, cone: _Cone,
            opts: SolverOptions, x0: NDArray | None = None):
    """HSD predictor-corrector IPM; returns (x, y, s, status)."""
    m, _ = A.shape
    e = cone.identity()
    x = e.copy() if x0 is None else x0.copy()
    s = e.copy()
    y = np.zeros(m)
    tau, kappa = 1.0, 1.0
    nu = cone.degree + 1

    bnorm = 1.0 + float(np.linalg.norm(b))
    cnorm = 1.0 + float(np.linalg.norm(c))

    status = "iteration-limit"
    n_iter = 0
    best = (np.inf, x.copy(), y.copy(), s.copy(), tau)
    for n_iter in range(1, opts.max_iter + 1):
        rp = b * tau - A @ x
        rd = c * tau - A.T @ y - s
        rg = kappa + c @ x - b @ y
        mu = (x @ s + tau * kappa) / nu

        pobj = c @ x / tau
        dobj = b @ y / tau
        pres = float(np.linalg.norm(rp)) / tau / bnorm
        dres = float(np.linalg.norm(rd)) / tau / cnorm
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        metric = max(pres, dres, gap)
        if metric < best[0]:
            best = (metric, x.copy(), y.copy(), s.copy(), tau)
        if pres < opts.tol and dres < opts.tol and gap < opts.tol:
            status = "optimal"
            break
        by = b @ y
        cx = c @ x
        if by > 1e-10 * bnorm and (
            np.linalg.norm(A.T @ y + s) < 1e-8 * by or tau < 1e-10 * kappa
        ):
            if np.linalg.norm(A.T @ y + s) < 1e-6 * max(by, 1.0):
                status = "infeasible"
                break
        if cx < -1e-10 * cnorm and (
            np.linalg.norm(A @ x) < 1e-8 * (-cx) or tau < 1e-10 * kappa
        ):
            if np.linalg.norm(A @ x) < 1e-6 * max(-cx, 1.0):
                status = "unbounded"
                break
        if tau < 1e-12 * max(1.0, kappa):
            status = "ill-posed"
            break

        try:
            scaling = _Scaling(cone, x, s)
        except np.linalg.LinAlgError:
            status = "numerical-failure"
            break
        lam = scaling.lambda_vec()
        lam_sq = _jordan_product(cone, lam, lam)

        try:
            schur = _SchurSolver(_schur_matrix(A, scaling))
        except SdpError:
            status = "numerical-failure"
            break
        Hc = scaling.apply_H(c)
        u1 = schur.solve(np.asarray(A @ Hc + b))

        def newton(d_c: NDArray, d_t: float, eta: float):
            r_c = scaling.jordan_solve(d_c)
            rtd = eta * rd - scaling.unscale_s(r_c)
            Hrtd = scaling.apply_H(rtd)
            u2 = schur.solve(np.asarray(eta * rp + A @ Hrtd))
            denom = (
                kappa / tau + c @ Hc - c @ scaling.apply_H(A.T @ u1) + b @ u1
            )
            num = (
                eta * rg + d_t / tau
                + c @ scaling.apply_H(A.T @ u2) - c @ Hrtd - b @ u2
            )
            dtau = float(num / denom)
            dy = u2 + dtau * u1
            dx = scaling.apply_H(A.T @ dy - dtau * c - rtd)
            dkappa = (d_t - kappa * dtau) / tau
            # recover ds from the dual equation (exact by construction);
            # recovering it from the complementarity elimination instead
            # loses dual feasibility once the scaling gets ill-conditioned
            ds = eta * rd + c * dtau - A.T @ dy
            return dx, dy, ds, dtau, dkappa

        dx_a, dy_a, ds_a, dtau_a, dkap_a = newton(-lam_sq, -tau * kappa, 1.0)
        alpha_a = min(
            _max_step(cone, x, dx_a),
            _max_step(cone, s, ds_a),
            (-tau / dtau_a) if dtau_a < 0 else np.inf,
            (-kappa / dkap_a) if dkap_a < 0 else np.inf,
        )
        alpha_a = min(1.0, opts.step_fraction * alpha_a)
        mu_aff = (
            (x + alpha_a * dx_a) @ (s + alpha_a * ds_a)
            + (tau + alpha_a * dtau_a) * (kappa + alpha_a * dkap_a)
        ) / nu
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3

        dxs = _jordan_product(cone, scaling.scale_x(dx_a), scaling.scale_s(ds_a))
        d_c = sigma * mu * e - lam_sq - dxs
        d_t = sigma * mu - tau * kappa - dtau_a * dkap_a
        dx, dy, ds, dtau, dkappa = newton(d_c, d_t, 1.0 - sigma)

        alpha = min(
            _max_step(cone, x, dx),
            _max_step(cone, s, ds),
            (-tau / dtau) if dtau < 0 else np.inf,
            (-kappa / dkappa) if dkappa < 0 else np.inf,
        )
        alpha = min(1.0, opts.step_fraction * alpha)
        if not np.isfinite(alpha) or alpha <= 1e-14:
            status = "numerical-failure"
            break

        x = x + alpha * dx
        y = y + alpha * dy
        s = s + alpha * ds
        tau += alpha * dtau
        kappa += alpha * dkappa

    if status in ("infeasible", "unbounded"):
        x_out, y_out, s_out = x, y, s
    else:
        if status in ("numerical-failure", "ill-posed", "iteration-limit"):
            # fall back to the best interior iterate seen
            _, x, y, s, tau = best
            if best[0] <= opts.tol:
                status = "optimal"
            elif best[0] <= 1e3 * opts.tol:
                status = "feasible-point"
        x_out, y_out, s_out = x / tau, y / tau, s / tau
    st = SolveStatus(
        status=status,
        objective=float(c @ x_out),
        primal_residual=float(np.linalg.norm(A @ x_out - b)) / bnorm,
        dual_residual=float(np.linalg.norm(A.T @ y_out + s_out - c)) / cnorm,
        gap=float(abs(c @ x_out - b @ y_out))
        / (1.0 + abs(c @ x_out) + abs(b @ y_out)),
        iterations=n_iter,
    )
    return x_out, y_out, s_out, st


# ---------------------------------------------------------------------------
# Public operations

def solve(
    p: ConicProblem,
    start: dict[str, NDArray | float] | None = None,
    opts: SolverOptions | None = None,
) -> tuple[dict[str, NDArray | float], SolveStatus]:
    """Solve the conic problem; returns (point, status).

    ``start`` optionally seeds the PSD/nonneg variable blocks of the
    initial iterate (shifted into the cone interior if needed).
    Identical inputs and options give identical iterates.
    """
    opts = opts or SolverOptions()
    c, A, b, cone, storage, placements = p.compile()
    x0 = None
    if start is not None:
        x0 = cone.identity()
        for name, value in start.items():
            var = p.variables.get(name)
            if var is None:
                continue
            kind, pos = placements[name]
            if kind == "psd":
                V = np.asarray(value, dtype=float)
                V = 0.5 * (V + V.T)
                w = np.linalg.eigvalsh(V)
                if w[0] < 1e-6:
                    V = V + (1e-6 - w[0]) * np.eye(var.rows)
                x0[pos: pos + var.size] = svec(V)
            elif kind == "nonneg":
                x0[pos] = max(float(value), 1e-6)
    x, y, s, st = _conelp(c, A, b, cone, opts, x0=x0)
    return p.unpack(x), st


def residuals(p: ConicProblem, point: dict[str, NDArray | float]) -> dict:
    """Constraint-by-constraint violation report at a point."""
    def value_of(expr: MatExpr) -> NDArray:
        out = expr.const.copy()
        for term in expr.terms:
            var = p.variables[term.var]
            val = point[term.var]
            if term.scalar_coeff is not None:
                out = out + float(val) * term.scalar_coeff
                continue
            if term.frob_coeff is not None:
                out = out + np.sum(term.frob_coeff * np.asarray(val))
                continue
            X = np.asarray(val, dtype=float)
            if term.transpose:
                X = X.T
            L = np.eye(expr.shape[0], X.shape[0]) if term.L is None else term.L
            R = np.eye(X.shape[1], expr.shape[1]) if term.R is None else term.R
            out = out + L @ X @ R
        return out

    eq_report = []
    for i, (expr, _) in enumerate(p.equalities):
        eq_report.append(
            {"index": i, "residual": float(np.linalg.norm(value_of(expr)))}
        )
    lmi_report = []
    for i, (expr, sense, margin) in enumerate(p.lmis):
        V = value_of(expr)
        V = 0.5 * (V + V.T)
        w = np.linalg.eigvalsh(V)
        margin_val = float(w[0] - margin) if sense == ">=" else float(-w[-1] - margin)
        lmi_report.append({"index": i, "margin": margin_val})
    obj = 0.0
    for name, coeff in p.objective.items():
        var = p.variables[name]
        val = point[name]
        if var.kind == "scalar":
            obj += float(np.asarray(coeff).reshape(())) * float(val)
        else:
            obj += float(np.sum(np.asarray(coeff) * np.asarray(val)))
    return {"equalities": eq_report, "lmis": lmi_report, "objective": obj}


def feasibility_phase(
    p: ConicProblem,
    required_margin: float = 1e-9,
    opts: SolverOptions | None = None,
) -> dict[str, NDArray | float]:
    """Strictly feasible point for the LMI/PSD constraints of ``p``.

    Maximizes a common slack t (capped at 1) by which every LMI and PSD
    variable block clears its boundary; t* >= required_margin certifies
    strict feasibility and the corresponding point is returned.  Raises
    :class:`InfeasibleError` carrying the per-constraint violation
    report otherwise.
    """
    q = ConicProblem()
    for var in p.variables.values():
        if var.kind == "scalar":
            q.add_scalar(var.name, nonneg=var.psd)
        elif var.kind == "sym":
            q.add_symmetric(var.name, var.rows, psd=var.psd)
        else:
            q.add_rect(var.name, var.rows, var.cols)
    t = q.add_scalar("_margin")
    cap = q.add_scalar("_margin_cap", nonneg=True)
    for expr, symmetric in p.equalities:
        e2 = q.expr(expr.shape, expr.const)
        e2.terms = list(expr.terms)
        q.add_equality(e2, symmetric=symmetric)
    for expr, sense, margin in p.lmis:
        d = expr.shape[0]
        e2 = q.expr(expr.shape, expr.const)
        e2.terms = list(expr.terms)
        sgn = -1.0 if sense == ">=" else 1.0
        e2.add_scalar(t, sgn * np.eye(d))
        q.add_lmi(e2, sense=sense, margin=margin)
    for var in p.variables.values():
        if var.kind == "sym" and var.psd:
            e2 = q.expr((var.rows, var.rows))
            e2.add(var.name)
            e2.add_scalar(t, -np.eye(var.rows))
            q.add_lmi(e2, sense=">=")
    e_cap = q.expr((1, 1), const=np.array([[-1.0]]))
    e_cap.add_scalar(t, np.array([[1.0]]))
    e_cap.add_scalar(cap, np.array([[1.0]]))
    q.add_equality(e_cap)
    q.set_objective({t: -1.0})

    point, st = solve(q, opts=opts or SolverOptions())
    t_star = float(point["_margin"])
    if st.status not in ("optimal", "iteration-limit") or t_star < required_margin:
        report = residuals(p, point)
        raise InfeasibleError(
            f"no strictly feasible point: max margin {t_star:.3e} "
            f"< {required_margin:.0e} (status {st.status})",
            certificate=report,
        )
    point.pop("_margin", None)
    point.pop("_margin_cap", None)
    return point
