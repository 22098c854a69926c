"""Distance from a real symmetric matrix to the diagonal matrices in operator norm.

The package builds finite truncations of the gamma operator family, computes
``min_d ||C + Diag(d)||`` with a certified duality gap, and decides whether a
given diagonal is minimal through spectral and convex-hull tests.
"""

__version__ = "0.1.0"

from mindiag._accel import USE_NUMBA, backend_name
from mindiag.certificates import (
    CertificateVerdict,
    CertificateX,
    HullWitness,
    build_certificate,
    compute_mM,
    condition3_check,
    certified_lower_bound,
    duality_gap,
    hull_intersection,
    positive_negative_parts,
    trace_norm,
    verify_certificate,
)
from mindiag.construction import Caso3Report, solve_orthogonal_diagonal, verify_caso3
from mindiag.errors import (
    CertificateUnavailableError,
    DegenerateSpectrumError,
    FormatError,
    MindiagError,
    NumericalError,
    ParameterError,
    SizeError,
    ZeroPivotError,
)
from mindiag.operators import (
    DiagVector,
    GammaFamilySpec,
    MatrixFile,
    SymMatrix,
    block_compose,
    build,
    build_C_a,
    build_d_sequence,
    build_gamma_T,
    build_Q,
    build_R,
    build_T1,
    build_Tr,
    build_TrPlusD,
    column,
    column_norm_sq,
    compute_r,
    diag_map,
    hadamard,
    load_diag,
    load_matrix,
    save_diag,
    save_matrix,
    tail_bound,
    with_diag,
    zero_row_col,
)
from mindiag.pipeline import CertifyReport, approx_report, certify
from mindiag.solver import (
    ApproxResult,
    SolverOptions,
    min_diag_norm,
    objective,
    oracle_grid,
    subgradient,
    sweep_quotient_norm,
)
from mindiag.spectral import (
    EigenSystem,
    SpectralProjections,
    balanced_spectrum_check,
    eig_sym,
    op_norm,
    spectral_projections,
    verify_vpm,
)
