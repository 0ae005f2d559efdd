"""Twisted-boundary Hamiltonian systems: index pairs and periodic orbits."""

from .symplectic import (
    PBoundary,
    gamma_p_path,
    rotation_block_matrix,
    standard_j,
    unitary_identification,
    validate_p,
)
from .basis import (
    BasisFunction,
    GalerkinSpace,
    build_space,
    eigen_frequencies,
    embed_coeffs,
    synthesize,
    synthesize_derivative,
)
from .index import (
    InertiaCount,
    LinearSystem,
    MaslovIndexPair,
    constant_system,
    form_matrix,
    inertia,
    maslov_p_index,
    monodromy,
    nullity_from_monodromy,
    spectral_flow,
    transformed_system,
)
from .models import (
    HamiltonianModel,
    HypothesisReport,
    builtin_family,
    check_hypotheses,
    truncate,
)
from .solver import (
    OrbitSolution,
    ReducedFunctional,
    SaddleOptions,
    assemble,
    certify,
    estimate_lambda_tau,
    find_saddle,
    linking_split,
)
from .period import (
    PeriodReport,
    extend,
    minimal_p_symmetric_period,
    minimal_period,
)
from .scenario import (
    RunReport,
    Scenario,
    emit,
    run_scenario,
    scenario_from_config,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
