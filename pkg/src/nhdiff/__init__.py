"""nhdiff: entry-wise Brownian diffusion of non-hermitian random matrices.

Exact finite-n evaluation of the averaged extended characteristic
polynomial, large-N Hopf-Lax/Burgers solvers for the spectral density and
the eigenvector-overlap field, Monte-Carlo cross-validation, and the
universal edge/collision/origin asymptotics.
"""

__version__ = "0.1.0"

from .core import (
    InitialCondition,
    SingularSpectrum,
    build_initial,
    family_spectrum,
    ginibre_spectrum,
    jordan_circulant,
    jordan_symbol_spectrum,
    load_matrix_file,
    phi0,
    singular_spectrum,
    spiric_spectrum,
)
from .montecarlo import (
    EnsembleConfig,
    ParticleCloud,
    coulomb_gas_simulate,
    evolve_path,
    rng_for_trial,
    sample_evolved,
)
from .observables import (
    EnsembleSample,
    FieldGrid,
    GridSpec,
    default_grid,
    estimate_fields,
    spectral_decompose,
)
from .aecp import (
    LogAecpValue,
    QuaternionPoint,
    RadialQuadrature,
    aecp_ginibre_closed,
    kernel_K,
    log_aecp,
    log_d0,
    mc_determinant_oracle,
    pde_residual,
    two_arg_aecp,
)
from .largen import (
    CharacteristicLine,
    CharacteristicsResult,
    LargeNPoint,
    characteristics_field,
    classify_support,
    closed_example,
    density_fd_oracle,
    density_general,
    hopf_lax_potential,
    overlap_general,
    pseudospectrum_boundary,
    solve_rstar,
    support_boundary,
    support_entry_time,
)
from .asymptotics import (
    ginibre_edge_profile,
    jordan_origin_profile,
    spiric_collision_profile,
)
