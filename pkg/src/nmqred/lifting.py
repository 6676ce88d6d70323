"""
Matrix lifting of the structured H2 reduction problem.

The bilinear terms of the LMI formulation (products of Gramian blocks
with themselves, their inverses and the coupling matrix) are replaced
by named blocks of one large symmetric matrix Z: block row 0 is an
identity anchor, blocks x1..x12 hold the primary lifting variables and
v1..v8 (plus one auxiliary) hold their products.  Every linking
identity becomes a linear equality between a first-column block and a
cross block of Z; the Gram consistency Z[a,b] = Z[a,0] Z[b,0]^T is NOT
imposed (convex relaxation), so Z >= 0 with the linear family is solved
by the interior-point kernel and the result is a heuristic candidate,
certified afterwards by projection and descent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .linalg import LinalgError, kron
from .model import QuadratureModel
from .realizability import extract_coupling
from . import sdp
from .sdp import ConicProblem, SolverOptions

__all__ = [
    "LiftLayout",
    "LiftedSDP",
    "PreLiftProblem",
    "assemble_lmi",
    "lift",
    "construct_lift_point",
    "rank_gap",
    "extract_candidate",
    "solve_lift_relaxation",
    "LMI_MARGIN",
]

# strict-LMI margin; strict cones are represented as a shift into the cone
LMI_MARGIN = 1e-9


@dataclass(frozen=True)
class LiftLayout:
    """Row layout of the lifted matrix Z.

    Each named block occupies ``rows`` consecutive rows of Z and stores
    a matrix of natural width ``width`` zero-padded to the anchor
    dimension d0; ``Z[rows_of(a), :width]`` recovers block ``a``.
    """

    m: int
    n: int
    r: int
    blocks: dict[str, tuple[int, int, int]]  # name -> (offset, rows, width)
    dim: int

    @property
    def d0(self) -> int:
        return 2 * (self.m + self.n)

    def rows_of(self, name: str) -> slice:
        off, rows, _ = self.blocks[name]
        return slice(off, off + rows)

    def value(self, Z: NDArray, name: str) -> NDArray:
        off, rows, width = self.blocks[name]
        return Z[off: off + rows, :width]

    def cross(self, Z: NDArray, a: str, b: str) -> NDArray:
        return Z[self.rows_of(a), self.rows_of(b)]

    def selector(self, name: str) -> NDArray:
        off, rows, _ = self.blocks[name]
        S = np.zeros((rows, self.dim))
        S[:, off: off + rows] = np.eye(rows)
        return S


def _build_layout(m: int, n: int, r: int) -> LiftLayout:
    no, nr = 2 * (m + n), 2 * (m + r)
    mp, rp, na = 2 * m, 2 * r, 2 * n
    spec = [
        ("1", no, no),        # identity anchor
        ("x1", no, no),       # Q1
        ("x2", no, nr),       # Q2
        ("x3", nr, nr),       # Q3
        ("x4", no, no),       # M
        ("x5", nr, nr),       # Q3^{-1}
        ("x6", nr, no),       # Q2^T
        ("x7", mp, rp),       # beta (x) I
        ("x8", rp, mp),       # beta^T (x) I
        ("x9", mp, mp),       # Q2 principal block
        ("x10", na, rp),      # Q2 ancillary block
        ("x11", mp, mp),      # Q3 principal block
        ("x12", rp, rp),      # Q3 ancillary block
        ("v1", no, nr),       # Q2 Q3^{-1}
        ("v2", nr, no),       # Q3^{-1} Q2^T
        ("v3", no, nr),       # Q1 Q2
        ("v4", no, nr),       # Q2 Q3
        ("v5", mp, rp),       # Q2_11 (beta (x) I)
        ("v6", na, mp),       # Q2_22 (beta^T (x) I)
        ("v7", mp, rp),       # Q3_11 (beta (x) I)
        ("v8", rp, mp),       # Q3_22 (beta^T (x) I)
        ("v1e", no, nr),      # Q2 Q3^{-1} Ebar
    ]
    blocks = {}
    off = 0
    for name, rows, width in spec:
        blocks[name] = (off, rows, width)
        off += rows
    return LiftLayout(m=m, n=n, r=r, blocks=blocks, dim=off)


def _ebar(m: int, r: int) -> NDArray:
    nr = 2 * (m + r)
    E = np.zeros((nr, nr))
    E[2 * m:, 2 * m:] = np.eye(2 * r)
    return E


@dataclass
class PreLiftProblem:
    """Structured LMI statement before lifting.

    Carries the model data, the dimension record, and the feasibility
    subset (the LMIs free of bilinear couplings) used for the heuristic
    starting point; the alpha scalars live in the subset with their
    positivity and sum constraints.
    """

    orig: QuadratureModel
    r: int
    alpha1: float
    alpha2: float
    corner_damping: float
    feasibility: ConicProblem
    lmi36_dim: int
    lmi37_dim: int

    @property
    def Cr(self) -> NDArray:
        return np.hstack(
            [-self.orig.B11.T, np.zeros((2 * self.orig.m, 2 * self.r))]
        )

    @property
    def Ar1(self) -> NDArray:
        """Reduced-drift template: principal block and the coupling slot,
        with a damping proxy in the ancillary corner so the split LMIs
        admit interior points."""
        m, r = self.orig.m, self.r
        z = np.zeros((2 * m, 2 * r))
        return np.block(
            [[self.orig.A11, z], [-z.T, -self.corner_damping * np.eye(2 * r)]]
        )

    @property
    def Br1(self) -> NDArray:
        m, r = self.orig.m, self.r
        out = np.zeros((2 * (m + r), self.orig.n_inputs))
        out[: 2 * m, : 2 * m] = self.orig.B11
        return out


def assemble_lmi(orig: QuadratureModel, r: int,
                 corner_damping: float | None = None) -> PreLiftProblem:
    """Structured LMI problem for a target order r (pre-lift form).

    The feasibility subset couples (Y1, Q1, M, alpha1, alpha2) through
    the positivity constraints and the principal stability LMI, with Y1
    standing in for alpha1*Q1 so everything stays linear.
    """
    if r >= orig.k:
        raise LinalgError(f"target order r={r} must be < n={orig.k}")
    m, n = orig.m, orig.k
    no = 2 * (m + n)
    A, C = orig.A, orig.C
    if corner_damping is None:
        sym = 0.5 * (orig.A22 + orig.A22.T)
        corner_damping = float(-np.mean(np.diag(sym)))

    p = ConicProblem()
    p.add_symmetric("Q1", no, psd=True)
    p.add_symmetric("Y1", no, psd=True)
    p.add_symmetric("M", no, psd=True)
    p.add_scalar("alpha1", nonneg=True)
    p.add_scalar("alpha2", nonneg=True)

    e = p.expr((1, 1), const=np.array([[-1.0]]))
    e.add_scalar("alpha1", np.array([[1.0]]))
    e.add_scalar("alpha2", np.array([[1.0]]))
    p.add_equality(e)
    for a in ("alpha1", "alpha2"):
        ea = p.expr((1, 1))
        ea.add_scalar(a, np.array([[1.0]]))
        p.add_lmi(ea, ">=", margin=LMI_MARGIN)

    # [[A'Y1 + Y1 A + alpha1 C'C, M A], [A'M, A'Q1 + Q1 A]] < 0
    dim36 = 2 * no
    E1 = np.vstack([np.eye(no), np.zeros((no, no))])
    E2 = np.vstack([np.zeros((no, no)), np.eye(no)])
    lmi = p.expr((dim36, dim36))
    lmi.add("Y1", L=E1 @ A.T, R=E1.T)
    lmi.add("Y1", L=E1, R=A @ E1.T)
    lmi.add_scalar("alpha1", E1 @ (C.T @ C) @ E1.T)
    lmi.add("M", L=E1, R=A @ E2.T)
    lmi.add("M", L=E2 @ A.T, R=E1.T)
    lmi.add("Q1", L=E2 @ A.T, R=E2.T)
    lmi.add("Q1", L=E2, R=A @ E2.T)
    p.add_lmi(lmi, "<=", margin=LMI_MARGIN)

    return PreLiftProblem(
        orig=orig,
        r=r,
        alpha1=0.5,
        alpha2=0.5,
        corner_damping=corner_damping,
        feasibility=p,
        lmi36_dim=dim36,
        lmi37_dim=no + 2 * (m + r),
    )


@dataclass
class LiftedSDP:
    """Lifted semidefinite relaxation with its named block index map."""

    layout: LiftLayout
    problem: ConicProblem
    pre: PreLiftProblem
    alpha1: float
    alpha2: float
    equality_names: list[str] = field(default_factory=list)

    def construct_point(self, Qh1: NDArray, Qh2: NDArray, Qh3: NDArray,
                        beta: NDArray) -> NDArray:
        return construct_lift_point(self.layout, Qh1, Qh2, Qh3, beta)

    def equality_residuals(self, Z: NDArray) -> dict[str, float]:
        """Residuals of the linear lifting equalities at a given Z."""
        lay = self.layout
        m, n, r = lay.m, lay.n, lay.r
        no, nr, mp = lay.d0, 2 * (m + r), 2 * m
        Ebar = _ebar(m, r)
        val = lay.value
        fro = np.linalg.norm
        res = {
            "anchor_identity": fro(lay.cross(Z, "1", "1") - np.eye(no)),
            "q1_symmetric": fro(val(Z, "x1") - val(Z, "x1").T),
            "q3_symmetric": fro(val(Z, "x3") - val(Z, "x3").T),
            "m_symmetric": fro(val(Z, "x4") - val(Z, "x4").T),
            "q3inv_symmetric": fro(val(Z, "x5") - val(Z, "x5").T),
            "q2T_link": fro(val(Z, "x6") - val(Z, "x2").T),
            "betaT_link": fro(val(Z, "x8") - val(Z, "x7").T),
            "q2_principal_link": fro(val(Z, "x9") - val(Z, "x2")[:mp, :mp]),
            "q2_ancillary_link": fro(val(Z, "x10") - val(Z, "x2")[mp:, mp:]),
            "q3_principal_link": fro(val(Z, "x11") - val(Z, "x3")[:mp, :mp]),
            "q3_ancillary_link": fro(val(Z, "x12") - val(Z, "x3")[mp:, mp:]),
            "v1_link": fro(val(Z, "v1") - lay.cross(Z, "x2", "x5")),
            "v2_link": fro(val(Z, "v2") - lay.cross(Z, "x5", "x2")),
            "v3_link": fro(val(Z, "v3") - lay.cross(Z, "x1", "x6")),
            "v4_link": fro(val(Z, "v4") - lay.cross(Z, "x2", "x3")),
            "v5_link": fro(val(Z, "v5") - lay.cross(Z, "x9", "x8")),
            "v6_link": fro(val(Z, "v6") - lay.cross(Z, "x10", "x7")),
            "v7_link": fro(val(Z, "v7") - lay.cross(Z, "x11", "x8")),
            "v8_link": fro(val(Z, "v8") - lay.cross(Z, "x12", "x7")),
            "v1e_link": fro(val(Z, "v1e") - val(Z, "v1") @ Ebar),
            "realizability_link": fro(val(Z, "v3") - val(Z, "v4")),
            "inverse_identity": fro(lay.cross(Z, "x3", "x5") - np.eye(nr)),
            "m_definition": fro(val(Z, "x4") - lay.cross(Z, "v1e", "x2")),
            "beta_tensor": _tensor_residual(val(Z, "x7")),
            "q1_blockdiag": fro(val(Z, "x1")[:mp, mp:]),
            "q2_blockdiag": np.sqrt(
                fro(val(Z, "x2")[:mp, mp:]) ** 2
                + fro(val(Z, "x2")[mp:, :mp]) ** 2
            ),
            "q3_blockdiag": fro(val(Z, "x3")[:mp, mp:]),
            "m_blockdiag": fro(val(Z, "x4")[:mp, mp:]),
            "q3inv_blockdiag": fro(val(Z, "x5")[:mp, mp:]),
        }
        return {k: float(v) for k, v in res.items()}


def _tensor_residual(X: NDArray) -> float:
    beta = extract_coupling(X)
    return float(np.linalg.norm(X - kron(beta, np.eye(2))))


def construct_lift_point(layout: LiftLayout, Qh1: NDArray, Qh2: NDArray,
                         Qh3: NDArray, beta: NDArray) -> NDArray:
    """Outer-product lifting of a candidate (Q1, Q2, Q3, beta).

    Builds U stacking the identity anchor and every named block value
    (zero-padded to the anchor width) and returns Z = U U^T.  The full
    linear equality family holds whenever the inputs are block-diagonal
    in the (principal, ancillary) partition, symmetric where required,
    and satisfy the realizability linking Q1 Q2 = Q2 Q3.
    """
    m, n, r = layout.m, layout.n, layout.r
    no, mp = layout.d0, 2 * m
    Qh3i = np.linalg.inv(Qh3)
    Ebar = _ebar(m, r)
    bI = kron(beta, np.eye(2))
    values = {
        "1": np.eye(no),
        "x1": Qh1,
        "x2": Qh2,
        "x3": Qh3,
        "x4": Qh2 @ Ebar @ Qh3i @ Qh2.T,
        "x5": Qh3i,
        "x6": Qh2.T,
        "x7": bI,
        "x8": bI.T,
        "x9": Qh2[:mp, :mp],
        "x10": Qh2[mp:, mp:],
        "x11": Qh3[:mp, :mp],
        "x12": Qh3[mp:, mp:],
        "v1": Qh2 @ Qh3i,
        "v2": Qh3i @ Qh2.T,
        "v3": Qh1 @ Qh2,
        "v4": Qh2 @ Qh3,
        "v5": Qh2[:mp, :mp] @ bI,
        "v6": Qh2[mp:, mp:] @ bI.T,
        "v7": Qh3[:mp, :mp] @ bI,
        "v8": Qh3[mp:, mp:] @ bI.T,
        "v1e": Qh2 @ Qh3i @ Ebar,
    }
    U = np.zeros((layout.dim, no))
    for name, (off, rows, width) in layout.blocks.items():
        V = values[name]
        if V.shape != (rows, width):
            raise LinalgError(
                f"lift block {name} must be {rows}x{width}, got {V.shape}"
            )
        U[off: off + rows, :width] = V
    return U @ U.T


def lift(pre: PreLiftProblem) -> LiftedSDP:
    """Assemble the lifted relaxation as a conic problem.

    All linking identities become linear equalities on Z; the LMIs are
    rebuilt from the first-column blocks with the bilinear alpha
    products fixed at alpha1 = alpha2 = 1/2; the Gram consistency
    between cross blocks and first-column blocks is dropped.
    """
    orig, r = pre.orig, pre.r
    m, n = orig.m, orig.k
    lay = _build_layout(m, n, r)
    no, nr, mp, rp = lay.d0, 2 * (m + r), 2 * m, 2 * r
    na = 2 * n
    A, B, C = orig.A, orig.B, orig.C
    Cr = pre.Cr
    a1 = a2 = 0.5
    Ebar = _ebar(m, r)

    p = ConicProblem()
    p.add_symmetric("Z", lay.dim, psd=True)
    p.add_scalar("gamma2", nonneg=True)

    S = {name: lay.selector(name) for name in lay.blocks}
    Sm = {name: M.T for name, M in S.items()}
    names: list[str] = []

    def eq(expr, name, symmetric=False):
        p.add_equality(expr, symmetric=symmetric)
        names.append(name)

    def block_term(expr, out_map, a, right_coef, b="1", sign=1.0):
        """Add sign * out_map @ Z[a, b-rows] @ right_coef."""
        expr.add("Z", L=sign * (out_map @ S[a]), R=Sm[b] @ right_coef)

    # anchor = identity
    e = p.expr((no, no), const=-np.eye(no))
    block_term(e, np.eye(no), "1", np.eye(no))
    eq(e, "anchor_identity", symmetric=True)

    # symmetry of the Q1, Q3, M, Q3^{-1} values (strict upper triangle)
    for name in ("x1", "x3", "x4", "x5"):
        _, rows, width = lay.blocks[name]
        for i in range(rows):
            for j in range(i + 1, width):
                e = p.expr((1, 1))
                e.add("Z", L=S[name][i: i + 1], R=Sm["1"][:, j: j + 1])
                e.add("Z", L=-S[name][j: j + 1], R=Sm["1"][:, i: i + 1])
                eq(e, f"{name}_symmetric_{i}_{j}")

    # x6 = x2^T and x8 = x7^T
    for tgt, src in [("x6", "x2"), ("x8", "x7")]:
        rows_t, width_t = lay.blocks[tgt][1:]
        e = p.expr((rows_t, width_t))
        block_term(e, np.eye(rows_t), tgt, np.eye(no, width_t))
        e.add(
            "Z",
            L=-np.eye(rows_t, no) @ S["1"],
            R=Sm[src] @ np.eye(lay.blocks[src][1], width_t),
        )
        eq(e, f"{tgt}_transpose_link")

    # sub-block links
    def subblock(name, src, row0, col0, d_r, d_c, tag):
        e = p.expr((d_r, d_c))
        block_term(e, np.eye(d_r), name, np.eye(no, d_c))
        Erow = np.zeros((d_r, lay.blocks[src][1]))
        Erow[:, row0: row0 + d_r] = np.eye(d_r)
        Ecol = np.zeros((no, d_c))
        Ecol[col0: col0 + d_c] = np.eye(d_c)
        block_term(e, -Erow, src, Ecol)
        eq(e, tag)

    subblock("x9", "x2", 0, 0, mp, mp, "q2_principal_link")
    subblock("x10", "x2", mp, mp, na, rp, "q2_ancillary_link")
    subblock("x11", "x3", 0, 0, mp, mp, "q3_principal_link")
    subblock("x12", "x3", mp, mp, rp, rp, "q3_ancillary_link")

    # x7 carries an exact beta (x) I structure
    for i in range(m):
        for j in range(r):
            ri, rj = 2 * i, 2 * j
            e = p.expr((1, 1))
            e.add("Z", L=S["x7"][ri: ri + 1], R=Sm["1"][:, rj: rj + 1])
            e.add("Z", L=-S["x7"][ri + 1: ri + 2], R=Sm["1"][:, rj + 1: rj + 2])
            eq(e, f"beta_tensor_diag_{i}{j}")
            e = p.expr((1, 1))
            e.add("Z", L=S["x7"][ri: ri + 1], R=Sm["1"][:, rj + 1: rj + 2])
            eq(e, f"beta_tensor_off1_{i}{j}")
            e = p.expr((1, 1))
            e.add("Z", L=S["x7"][ri + 1: ri + 2], R=Sm["1"][:, rj: rj + 1])
            eq(e, f"beta_tensor_off2_{i}{j}")

    # block-diagonality in the (principal, ancillary) partition
    def offdiag_zero(name, row0, nrow, col0, ncol, tag):
        e = p.expr((nrow, ncol))
        Erow = np.zeros((nrow, lay.blocks[name][1]))
        Erow[:, row0: row0 + nrow] = np.eye(nrow)
        Ecol = np.zeros((no, ncol))
        Ecol[col0: col0 + ncol] = np.eye(ncol)
        block_term(e, Erow, name, Ecol)
        eq(e, tag)

    offdiag_zero("x1", 0, mp, mp, na, "q1_blockdiag")
    offdiag_zero("x2", 0, mp, mp, rp, "q2_blockdiag_upper")
    offdiag_zero("x2", mp, na, 0, mp, "q2_blockdiag_lower")
    offdiag_zero("x3", 0, mp, mp, rp, "q3_blockdiag")
    offdiag_zero("x4", 0, mp, mp, na, "m_blockdiag")
    offdiag_zero("x5", 0, mp, mp, rp, "q3inv_blockdiag")

    # v-block linkings: first-column value equals a cross block
    def vlink(vname, a, b, tag):
        nrow = lay.blocks[vname][1]
        ncol = lay.blocks[b][1]
        e = p.expr((nrow, ncol))
        block_term(e, np.eye(nrow), vname, np.eye(no, ncol))
        block_term(e, -np.eye(nrow), a, np.eye(ncol), b=b)
        eq(e, tag)

    vlink("v1", "x2", "x5", "v1_link")
    vlink("v2", "x5", "x2", "v2_link")
    vlink("v3", "x1", "x6", "v3_link")
    vlink("v4", "x2", "x3", "v4_link")
    vlink("v5", "x9", "x8", "v5_link")
    vlink("v6", "x10", "x7", "v6_link")
    vlink("v7", "x11", "x8", "v7_link")
    vlink("v8", "x12", "x7", "v8_link")

    # v1e = v1 Ebar (linear in the v1 block)
    e = p.expr((no, nr))
    block_term(e, np.eye(no), "v1e", np.eye(no, nr))
    block_term(e, -np.eye(no), "v1", np.eye(no, nr) @ Ebar)
    eq(e, "v1e_link")

    # linearized realizability: Q1 Q2 = Q2 Q3
    e = p.expr((no, nr))
    block_term(e, np.eye(no), "v3", np.eye(no, nr))
    block_term(e, -np.eye(no), "v4", np.eye(no, nr))
    eq(e, "realizability_link")

    # inverse chain: Q3 Q3^{-1} = I and M = (Q2 Q3^{-1} Ebar) Q2^T
    e = p.expr((nr, nr), const=-np.eye(nr))
    block_term(e, np.eye(nr), "x3", np.eye(nr), b="x5")
    eq(e, "inverse_identity")
    e = p.expr((no, no))
    block_term(e, np.eye(no), "x4", np.eye(no))
    block_term(e, -np.eye(no), "v1e", np.eye(no), b="x2")
    eq(e, "m_definition")

    # ---- LMIs on the first-column blocks -------------------------------
    def sym_pair(expr, out_map, name, right_coef):
        """out_map @ val(name) @ right_coef plus its transpose."""
        expr.add("Z", L=out_map @ S[name], R=Sm["1"] @ right_coef)
        expr.add("Z", L=right_coef.T @ S["1"], R=Sm[name] @ out_map.T)

    for name, d in [("x1", no), ("x3", nr)]:
        e = p.expr((d, d))
        sym_pair(e, 0.5 * np.eye(d), name, np.eye(no, d))
        p.add_lmi(e, ">=", margin=LMI_MARGIN)

    dq = no + nr
    Eq1 = np.zeros((dq, no)); Eq1[:no] = np.eye(no)
    Eq3 = np.zeros((dq, nr)); Eq3[no:] = np.eye(nr)
    e = p.expr((dq, dq))
    sym_pair(e, 0.5 * Eq1, "x1", np.eye(no) @ Eq1.T)
    sym_pair(e, Eq1, "x2", np.eye(no, nr) @ Eq3.T)
    sym_pair(e, 0.5 * Eq3, "x3", np.eye(no, nr) @ Eq3.T)
    p.add_lmi(e, ">=", margin=LMI_MARGIN)

    # principal stability LMI
    d36 = 2 * no
    E1 = np.zeros((d36, no)); E1[:no] = np.eye(no)
    E2 = np.zeros((d36, no)); E2[no:] = np.eye(no)
    e = p.expr((d36, d36), const=a1 * E1 @ (C.T @ C) @ E1.T)
    sym_pair(e, a1 * E1 @ A.T, "x1", np.eye(no) @ E1.T)
    sym_pair(e, E2 @ A.T, "x1", np.eye(no) @ E2.T)
    sym_pair(e, E1, "x4", A @ E2.T)
    p.add_lmi(e, "<=", margin=LMI_MARGIN)

    # coupled stability LMI with the lifted product blocks
    d37 = no + nr
    F1 = np.zeros((d37, no)); F1[:no] = np.eye(no)
    F2 = np.zeros((d37, nr)); F2[no:] = np.eye(nr)
    e = p.expr(
        (d37, d37),
        const=(
            a2 * F1 @ (C.T @ C) @ F1.T
            + F2 @ (Cr.T @ Cr) @ F2.T
            - F1 @ (C.T @ Cr) @ F2.T
            - F2 @ (Cr.T @ C) @ F1.T
        ),
    )
    sym_pair(e, a2 * F1 @ A.T, "x1", np.eye(no) @ F1.T)
    sym_pair(e, F1 @ A.T, "x2", np.eye(no, nr) @ F2.T)
    Fp = orig.A11
    corner = np.zeros((nr, nr))
    corner[mp:, mp:] = -pre.corner_damping * np.eye(rp)
    Row1_p = np.zeros((d37, mp)); Row1_p[:mp] = np.eye(mp)
    Row1_a = np.zeros((d37, na)); Row1_a[mp:no] = np.eye(na)
    Col2_p = np.zeros((d37, mp)); Col2_p[no: no + mp] = np.eye(mp)
    Col2_a = np.zeros((d37, rp)); Col2_a[no + mp:] = np.eye(rp)
    # (1,2) block: Q2_11 Fp, v5, -v6 and the damping proxy
    sym_pair(e, Row1_p, "x9", np.eye(no, mp) @ Fp @ Col2_p.T)
    sym_pair(e, Row1_p, "v5", np.eye(no, rp) @ Col2_a.T)
    sym_pair(e, -Row1_a, "v6", np.eye(no, mp) @ Col2_p.T)
    sym_pair(e, F1, "x2", np.eye(no, nr) @ corner @ F2.T)
    # (2,2) block: Q3_11 Fp, v7, -v8 and the damping proxy
    sym_pair(e, Col2_p, "x11", np.eye(no, mp) @ Fp @ Col2_p.T)
    sym_pair(e, Col2_p, "v7", np.eye(no, rp) @ Col2_a.T)
    sym_pair(e, -Col2_a, "v8", np.eye(no, mp) @ Col2_p.T)
    sym_pair(e, F2, "x3", np.eye(no, nr) @ corner @ F2.T)
    p.add_lmi(e, "<=", margin=LMI_MARGIN)

    # trace bound: tr([B' Br1'] Qhat [B; Br1]) <= gamma^2
    Br1 = pre.Br1
    tb = p.expr((1, 1))
    tb.add_frob("Z", Sm["x1"] @ (B @ B.T) @ S["1"])
    tb.add_frob("Z", 2.0 * Sm["x2"] @ (B @ Br1.T) @ np.eye(nr, no) @ S["1"])
    tb.add_frob("Z", Sm["x3"] @ (Br1 @ Br1.T) @ np.eye(nr, no) @ S["1"])
    tb.add_scalar("gamma2", -np.eye(1))
    p.add_lmi(tb, "<=", margin=0.0)

    p.set_objective({"gamma2": 1.0})
    return LiftedSDP(
        layout=lay, problem=p, pre=pre, alpha1=a1, alpha2=a2,
        equality_names=names,
    )


def rank_gap(Z: NDArray, d0: int) -> float:
    """Ratio sigma_{d0+1}/sigma_{d0}; zero iff Z has the exact lift rank."""
    sv = np.linalg.svd(Z, compute_uv=False)
    if d0 >= sv.size or sv[d0 - 1] <= 0:
        return 0.0
    return float(sv[d0] / sv[d0 - 1])


def extract_candidate(lifted: LiftedSDP, Z: NDArray):
    """Read (theta, G22, beta) off the first block column of Z.

    Rebuilds the ancillary blocks through T = Q3^{-1} Q2^T and
    V = Q1^{-1} Q2 with the ancillary selectors; the caller projects
    and polishes the result.
    """
    from .reduction import ReducedParams

    lay = lifted.layout
    orig = lifted.pre.orig
    m, n, r = lay.m, lay.n, lay.r
    nr, mp, rp = 2 * (m + r), 2 * m, 2 * r
    Qh1 = 0.5 * (lay.value(Z, "x1") + lay.value(Z, "x1").T)
    Qh2 = lay.value(Z, "x2")
    Qh3 = 0.5 * (lay.value(Z, "x3") + lay.value(Z, "x3").T)
    T = np.linalg.solve(Qh3, Qh2.T)
    V = np.linalg.solve(Qh1, Qh2)
    EL = np.zeros((rp, nr)); EL[:, mp:] = np.eye(rp)
    ER = np.zeros((2 * n, orig.n_inputs)); ER[:, mp:] = np.eye(2 * n)
    A22 = EL @ T @ orig.A @ V @ EL.T
    B22 = EL @ T @ orig.B @ ER.T
    beta = extract_coupling(lay.value(Z, "x7"))
    return ReducedParams(theta_skew=0.5 * (A22 - A22.T), G22=B22, beta=beta)


def solve_lift_relaxation(orig: QuadratureModel, spec) -> tuple:
    """Feasibility phase, lifted solve, extraction.

    Returns (params_or_None, diagnostics); never raises on solver
    trouble, the caller falls back to the truncation seed.
    """
    diagnostics: dict = {}
    try:
        pre = assemble_lmi(orig, spec.r)
        start_feas = sdp.feasibility_phase(
            pre.feasibility, required_margin=LMI_MARGIN,
            opts=SolverOptions(tol=spec.sdp_tol, max_iter=spec.sdp_max_iter),
        )
        diagnostics["feasibility_phase"] = "ok"
    except sdp.InfeasibleError as exc:
        diagnostics["feasibility_phase"] = f"infeasible: {exc}"
        return None, diagnostics
    except sdp.SdpError as exc:
        diagnostics["feasibility_phase"] = f"failed: {exc}"
        return None, diagnostics

    lifted = lift(pre)
    lay = lifted.layout
    m, n, r = lay.m, lay.n, lay.r
    no, nr = lay.d0, 2 * (m + r)

    # warm start: mode-truncation (Q1, Q2, Q3, beta) lifted as an outer
    # product (satisfies the equalities up to the commuting condition)
    Q1w = np.asarray(start_feas["Q1"])
    Q1w = 0.5 * (Q1w + Q1w.T)
    Q1w = _block_diagonalize(Q1w, 2 * m)
    W = np.zeros((no, nr))
    W[: 2 * m, : 2 * m] = np.eye(2 * m)
    W[2 * m: 2 * m + 2 * r, 2 * m:] = np.eye(2 * r)
    Q2w = Q1w @ W
    Q3w = W.T @ Q1w @ W
    beta_w = extract_coupling(orig.A12)[:, :r]
    try:
        Zw = construct_lift_point(lay, Q1w, Q2w, Q3w, beta_w)
    except np.linalg.LinAlgError:
        Zw = None

    opts = SolverOptions(tol=spec.sdp_tol, max_iter=spec.sdp_max_iter)
    start = {"Z": Zw} if Zw is not None else None
    try:
        point, st = sdp.solve(lifted.problem, start=start, opts=opts)
    except sdp.SdpError as exc:
        diagnostics["sdp_status"] = f"failed: {exc}"
        return None, diagnostics
    diagnostics["sdp_status"] = st.status
    diagnostics["sdp_objective"] = st.objective
    diagnostics["sdp_iterations"] = st.iterations
    diagnostics["gamma"] = float(np.sqrt(max(st.objective, 0.0)))
    Z = np.asarray(point["Z"])
    Z = 0.5 * (Z + Z.T)
    diagnostics["rank_gap"] = rank_gap(Z, lay.d0)
    if st.status not in ("optimal", "feasible-point", "iteration-limit"):
        return None, diagnostics
    try:
        params = extract_candidate(lifted, Z)
    except np.linalg.LinAlgError:
        diagnostics["extraction"] = "singular Gramian blocks"
        return None, diagnostics
    return params, diagnostics


def _block_diagonalize(M: NDArray, mp: int) -> NDArray:
    out = M.copy()
    out[:mp, mp:] = 0.0
    out[mp:, :mp] = 0.0
    return out
