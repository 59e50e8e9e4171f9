"""Matrix Poincare inequalities for finite reversible Markov chains."""

from .markov_core import (
    ChainError,
    NotAGenerator,
    NotReversible,
    Reducible,
    ReversibleGenerator,
    StateCapExceeded,
    StationaryMeasure,
    build_birth_death,
    build_complete_graph,
    build_hypercube,
    build_metropolis,
    build_product,
    build_two_state,
    chain_from_dict,
    chain_to_dict,
    check_detailed_balance,
    from_kernel,
    new_generator,
)
from .spectral import (
    SpectralDecomposition,
    eigendecompose,
    poincare_constant,
    scalar_dirichlet,
    scalar_variance,
    spectral_gap,
    verify_scalar_poincare,
    weighted_inner,
)
from .matrix_function import (
    MatrixFunction,
    ModeCoefficients,
    dirichlet_via_modes,
    matrix_dirichlet,
    matrix_inner,
    matrix_mean,
    matrix_variance,
    mode_decompose,
    mode_reconstruct,
    random_matrix_function,
    slice,
    variance_via_modes,
    verify_slice_identity,
)
from .certification import (
    FuzzConfig,
    FuzzSummary,
    LoewnerCertificate,
    PoincareReport,
    Verdict,
    certify_matrix_poincare,
    certify_scalar_reduction,
    equality_witness,
    fuzz,
    psd_compare,
)
from .concentration import (
    TailReport,
    chebyshev_bound,
    ergodic_average,
    exact_tail,
    sample_trajectory,
    tail_report,
)

__version__ = "0.1.0"
