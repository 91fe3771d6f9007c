"""Quantum frequency estimation with N two-level atoms under collective dephasing."""
from .symstate import (
    FullState,
    SchemeKind,
    SchemeSpec,
    SymmetricState,
    dfs_pattern_state,
    ghz_full,
    ghz_state,
    product_state,
    symmetrize,
)
from .dynamics import (
    FullDensityMatrix,
    NoiseParams,
    SymDensityMatrix,
    euler_maruyama_trajectory,
    evolve_full,
    evolve_symmetric,
    langevin_trajectory,
    trajectory_average,
)
from .fisher import (
    GeneratorSpec,
    PrecisionResult,
    classical_fisher,
    cramer_rao,
    ghz_optimal_precision,
    qfi_mixed,
    qfi_pure,
)
from .optimize import (
    OptimizationConfig,
    optimal_precision,
    optimize_state_at_t,
    product_precision_opt,
)
from .dfs import (
    ImperfectionModel,
    Target,
    classical_baseline,
    compose_faulty_povm,
    dfs_fisher,
    dfs_precision_bound,
    fidelity_threshold,
    outcome_probability,
)
from .mle import (
    DFSFrequencyEstimator,
    ExperimentBudget,
    ProductFrequencyEstimator,
    dfs_ml_estimate,
    dfs_uncertainty,
    nu_e_distribution,
    product_ml_estimate,
    product_uncertainty,
    simulate_runs,
)

__version__ = "0.1.0"
