"""
Augmented-model construction for linear non-Markovian quantum systems.

A principal system of ``m`` oscillator modes is directly coupled to an
ancillary system of ``n`` fictitious modes that stand in for the
internal modes of a memory-bearing environment.  The joint model is
built first in complex annihilation-operator form (F, G, H) and then
mapped entrywise to a real quadrature state space (A, B, C, D).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import block_diag

from .linalg import LinalgError, check_finite

__all__ = [
    "PhysicalParams",
    "ComplexQSDE",
    "QuadratureModel",
    "build_complex",
    "quadrature_map",
    "to_quadrature",
    "build_example",
    "paper_example_params",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Physical parameters of the augmented model.

    Rates and frequencies are angular, in GHz (time in ns).  When the
    full coupling matrices are omitted, diagonal defaults are
    synthesized from the scalar rates; ``synthesized`` on the built
    model records which ones.
    """

    m: int
    n: int
    omega_p: tuple[float, ...]
    omega_a: tuple[float, ...]
    gamma_p: tuple[float, ...]
    gamma_a: tuple[float, ...]
    kappa: tuple[float, ...]
    Omega_p: NDArray | None = None
    Omega_a: NDArray | None = None
    N_p: NDArray | None = None
    N_a: NDArray | None = None
    G_a_row: NDArray | None = None
    K_p_row: NDArray | None = None

    def __post_init__(self):
        if self.m < 1 or self.n < 0:
            raise LinalgError(f"invalid mode counts m={self.m}, n={self.n}")
        for name, seq, count in [
            ("omega_p", self.omega_p, self.m),
            ("omega_a", self.omega_a, self.n),
            ("gamma_p", self.gamma_p, self.m),
            ("gamma_a", self.gamma_a, self.n),
            ("kappa", self.kappa, self.m),
        ]:
            if len(seq) != count:
                raise LinalgError(f"{name} must have length {count}, got {len(seq)}")
        if any(g <= 0 for g in self.gamma_p) or any(g <= 0 for g in self.gamma_a):
            raise LinalgError("damping rates must be positive")
        if any(k < 0 for k in self.kappa):
            raise LinalgError("coupling strengths must be nonnegative")
        for name, M, shape in [
            ("Omega_p", self.Omega_p, (self.m, self.m)),
            ("Omega_a", self.Omega_a, (self.n, self.n)),
            ("N_a", self.N_a, (self.n, self.n)),
            ("G_a_row", self.G_a_row, (1, self.n)),
            ("K_p_row", self.K_p_row, (1, self.m)),
        ]:
            if M is not None and np.asarray(M).shape != shape:
                raise LinalgError(f"{name} must have shape {shape}")
        if self.N_p is not None and np.asarray(self.N_p).shape[1] != self.m:
            raise LinalgError("N_p must have m columns")
        for name, M in [("Omega_p", self.Omega_p), ("Omega_a", self.Omega_a)]:
            if M is not None:
                M = np.asarray(M)
                if np.linalg.norm(M - M.conj().T) > 1e-12 * max(1.0, np.linalg.norm(M)):
                    raise LinalgError(f"{name} must be Hermitian")


@dataclass(frozen=True)
class ComplexQSDE:
    """Complex-coefficient model da = F a dt + G dB, dB_out = H a dt + [I 0] dB."""

    F: NDArray
    G: NDArray
    H: NDArray
    m: int
    n: int
    synthesized: tuple[str, ...] = ()


@dataclass
class QuadratureModel:
    """Real quadrature state space dx = A x dt + B dw, dy = C x dt + D dw.

    ``m`` principal modes, ``k`` ancillary modes (n for an original
    model, r for a reduced one), ``n_in`` ancillary input modes.  The
    state ordering interleaves position/momentum per mode, principal
    modes first.
    """

    A: NDArray
    B: NDArray
    C: NDArray
    D: NDArray
    m: int
    k: int
    n_in: int
    sign_convention: str = "positive"
    synthesized: tuple[str, ...] = ()

    def __post_init__(self):
        self.A = check_finite(np.asarray(self.A, dtype=float), "A")
        self.B = check_finite(np.asarray(self.B, dtype=float), "B")
        self.C = check_finite(np.asarray(self.C, dtype=float), "C")
        self.D = check_finite(np.asarray(self.D, dtype=float), "D")
        ns, ni, no = 2 * (self.m + self.k), 2 * (self.m + self.n_in), 2 * self.m
        if self.A.shape != (ns, ns):
            raise LinalgError(f"A must be {ns}x{ns}, got {self.A.shape}")
        if self.B.shape != (ns, ni):
            raise LinalgError(f"B must be {ns}x{ni}, got {self.B.shape}")
        if self.C.shape != (no, ns):
            raise LinalgError(f"C must be {no}x{ns}, got {self.C.shape}")
        if self.D.shape != (no, ni):
            raise LinalgError(f"D must be {no}x{ni}, got {self.D.shape}")

    @property
    def n_states(self) -> int:
        return 2 * (self.m + self.k)

    @property
    def n_inputs(self) -> int:
        return 2 * (self.m + self.n_in)

    # Block accessors for the (principal, ancillary) partition.
    @property
    def A11(self) -> NDArray:
        return self.A[: 2 * self.m, : 2 * self.m]

    @property
    def A12(self) -> NDArray:
        return self.A[: 2 * self.m, 2 * self.m:]

    @property
    def A21(self) -> NDArray:
        return self.A[2 * self.m:, : 2 * self.m]

    @property
    def A22(self) -> NDArray:
        return self.A[2 * self.m:, 2 * self.m:]

    @property
    def B11(self) -> NDArray:
        return self.B[: 2 * self.m, : 2 * self.m]

    @property
    def B12(self) -> NDArray:
        return self.B[: 2 * self.m, 2 * self.m:]

    @property
    def B21(self) -> NDArray:
        return self.B[2 * self.m:, : 2 * self.m]

    @property
    def B22(self) -> NDArray:
        return self.B[2 * self.m:, 2 * self.m:]

    @property
    def C11(self) -> NDArray:
        return self.C[:, : 2 * self.m]

    @property
    def C12(self) -> NDArray:
        return self.C[:, 2 * self.m:]


def _defaults(p: PhysicalParams):
    synthesized = []
    Omega_p = p.Omega_p
    if Omega_p is None:
        Omega_p = np.diag(np.asarray(p.omega_p, dtype=complex))
        synthesized.append("Omega_p")
    Omega_a = p.Omega_a
    if Omega_a is None:
        Omega_a = np.diag(np.asarray(p.omega_a, dtype=complex))
        synthesized.append("Omega_a")
    N_p = p.N_p
    if N_p is None:
        N_p = np.diag(np.sqrt(np.asarray(p.gamma_p, dtype=complex)))
        synthesized.append("N_p")
    N_a = p.N_a
    if N_a is None:
        N_a = np.diag(np.sqrt(np.asarray(p.gamma_a, dtype=complex)))
        synthesized.append("N_a")
    K_p = p.K_p_row
    if K_p is None:
        K_p = np.sqrt(np.asarray(p.kappa, dtype=complex)).reshape(1, p.m)
        synthesized.append("K_p_row")
    G_a = p.G_a_row
    if G_a is None:
        # Half the bare damping amplitude: together with K_p this puts
        # the coupling block at sqrt(kappa_i * gamma_j) / 2, the scale
        # of the reference two-mode/three-mode example.
        G_a = 0.5 * np.sqrt(np.asarray(p.gamma_a, dtype=complex)).reshape(1, p.n)
        synthesized.append("G_a_row")
    return (
        np.asarray(Omega_p, dtype=complex),
        np.asarray(Omega_a, dtype=complex),
        np.asarray(N_p, dtype=complex),
        np.asarray(N_a, dtype=complex),
        np.asarray(K_p, dtype=complex),
        np.asarray(G_a, dtype=complex),
        tuple(synthesized),
    )


def build_complex(p: PhysicalParams) -> ComplexQSDE:
    """Assemble the complex triple (F, G, H) of the augmented model.

    F = [[F_p, K_p^† G_a], [-G_a^† K_p, F_a]] with
    F_p = -iΩ_p - N_p^†N_p/2 and F_a = -iΩ_a - N_a^†N_a/2;
    G = diag(-N_p^†, -N_a^†); H = [N_p, 0].
    """
    Omega_p, Omega_a, N_p, N_a, K_p, G_a, synthesized = _defaults(p)
    m, n = p.m, p.n
    mp = N_p.shape[0]

    F_p = -1j * Omega_p - 0.5 * N_p.conj().T @ N_p
    F_a = -1j * Omega_a - 0.5 * N_a.conj().T @ N_a
    F12 = K_p.conj().T @ G_a
    F21 = -G_a.conj().T @ K_p
    F = np.block([[F_p, F12], [F21, F_a]])
    G = block_diag(-N_p.conj().T, -N_a.conj().T)
    H = np.hstack([N_p, np.zeros((mp, n), dtype=complex)])
    return ComplexQSDE(F=F, G=G, H=H, m=m, n=n, synthesized=synthesized)


def quadrature_map(M_c: NDArray) -> NDArray:
    """Entrywise complex-to-quadrature map.

    Each complex entry a+bi expands to the 2x2 real block
    [[a, -b], [b, a]]; the map is a ring homomorphism and sends the
    conjugate transpose to the real transpose.
    """
    M_c = np.asarray(M_c, dtype=complex)
    if M_c.ndim != 2:
        M_c = np.atleast_2d(M_c)
    a, b = M_c.real, M_c.imag
    rows, cols = M_c.shape
    out = np.empty((2 * rows, 2 * cols))
    out[0::2, 0::2] = a
    out[0::2, 1::2] = -b
    out[1::2, 0::2] = b
    out[1::2, 1::2] = a
    return out


def to_quadrature(q: ComplexQSDE, sign_convention: str = "positive") -> QuadratureModel:
    """Map a complex model to the real quadrature state space.

    ``sign_convention`` fixes the overall sign of the noise matrix B:
    ``"physical"`` keeps B = M(G) with G = diag(-N_p^†, -N_a^†);
    ``"positive"`` (default) flips B so diagonal couplings carry
    +sqrt(gamma).  C is rebuilt as [-(B11)^T, 0] in either case, so the
    realizability conditions and all norms are convention-invariant.
    """
    if sign_convention not in ("positive", "physical"):
        raise LinalgError(f"unknown sign convention: {sign_convention!r}")
    m, n = q.m, q.n
    if q.H.shape[0] != m:
        raise LinalgError(
            "quadrature form requires as many probing channels as principal modes"
        )
    A = quadrature_map(q.F)
    B = quadrature_map(q.G)
    if sign_convention == "positive":
        B = -B
    C = np.hstack([-B[: 2 * m, : 2 * m].T, np.zeros((2 * m, 2 * n))])
    D = np.hstack([np.eye(2 * m), np.zeros((2 * m, 2 * n))])
    return QuadratureModel(
        A=A, B=B, C=C, D=D, m=m, k=n, n_in=n,
        sign_convention=sign_convention, synthesized=q.synthesized,
    )


def paper_example_params() -> PhysicalParams:
    """Parameters of the reference example: two principal modes driven
    by a three-mode ancillary environment."""
    return PhysicalParams(
        m=2,
        n=3,
        omega_p=(10.85, 9.74),
        omega_a=(10.03, 8.93, 5.06),
        gamma_p=(0.954, 0.987),
        gamma_a=(0.848, 1.034, 0.775),
        kappa=(1.25, 1.14),
    )


def build_example() -> QuadratureModel:
    """Quadrature model of the reference two-principal/three-ancillary
    oscillator system."""
    return to_quadrature(build_complex(paper_example_params()))


def reference_reduced_model() -> QuadratureModel:
    """Published single-ancillary-mode reduction of the reference example.

    Matrices transcribed at 4-decimal precision; the square 2x2 noise
    block is zero-padded to the canonical rectangular input layout, so
    the model keeps all three ancillary input mode pairs.
    """
    principal = build_example()
    Fa = np.array([[-0.6278, 10.0793], [-10.0696, -0.6277]])
    beta = np.array([[0.5528], [0.5262]])
    Na = np.array([[1.1201, -0.0310], [0.0224, 1.1202]])
    A12 = np.kron(beta, np.eye(2))
    A = np.block([[principal.A11, A12], [-A12.T, Fa]])
    B = np.block(
        [
            [principal.B11, np.zeros((4, 6))],
            [np.zeros((2, 4)), np.hstack([Na, np.zeros((2, 4))])],
        ]
    )
    C = np.hstack([-principal.B11.T, np.zeros((4, 2))])
    D = np.hstack([np.eye(4), np.zeros((4, 6))])
    return QuadratureModel(
        A=A, B=B, C=C, D=D, m=2, k=1, n_in=3,
        sign_convention="positive", synthesized=("transcribed",),
    )


def with_input_count(mdl: QuadratureModel, n_in: int) -> QuadratureModel:
    """Copy of a model with its ancillary input block truncated or
    zero-padded to ``n_in`` mode pairs."""
    cur = mdl.n_in
    if n_in == cur:
        return mdl
    cols_keep = 2 * (mdl.m + min(n_in, cur))
    pad = 2 * (n_in - cur) if n_in > cur else 0
    B = np.hstack([mdl.B[:, :cols_keep], np.zeros((mdl.n_states, pad))])
    D = np.hstack([mdl.D[:, :cols_keep], np.zeros((mdl.D.shape[0], pad))])
    return QuadratureModel(
        A=mdl.A.copy(), B=B, C=mdl.C.copy(), D=D,
        m=mdl.m, k=mdl.k, n_in=n_in,
        sign_convention=mdl.sign_convention, synthesized=mdl.synthesized,
    )
