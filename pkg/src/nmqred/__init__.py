"""
nmqred: structure-preserving H2 model reduction for augmented models of
linear non-Markovian quantum systems.

The package builds augmented principal/ancillary oscillator models from
physical parameters, verifies their physical realizability, reduces the
ancillary subsystem under an H2 criterion while preserving realizability
and the principal dynamics, and evaluates the result in the frequency
domain.
"""

from .linalg import (
    BlockSpec,
    LinalgError,
    NotHurwitzError,
    eigenvalues,
    is_hurwitz,
    is_psd,
    kron,
    real_schur,
    solve_lyapunov,
    spectral_abscissa,
)
from .model import (
    ComplexQSDE,
    PhysicalParams,
    QuadratureModel,
    build_complex,
    build_example,
    paper_example_params,
    quadrature_map,
    to_quadrature,
)
from .realizability import (
    MACHINE_TOL,
    TRANSCRIBED_TOL,
    RealizabilityReport,
    check_complex,
    check_quadrature,
    extract_coupling,
    project_to_realizable,
    realizable_parameterization,
)
from .analysis import (
    ErrorSystem,
    GramianPair,
    bode_data,
    build_error_system,
    default_omega_grid,
    error_gramians,
    h2_norm_sq,
    transfer_eval,
    write_bode_csv,
)
from .reduction import (
    ReductionResult,
    ReductionSpec,
    gradient,
    objective_and_gramians,
    reconstruct_Br,
    reconstruct_Fa,
    reduce_model,
)

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
