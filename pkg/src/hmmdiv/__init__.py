"""Divergence rates between Markov switching models, two ways: Monte Carlo
simulation of the forward filter's likelihood ratios, and a deterministic
Fredholm / Perron-eigenvector method on the filter's invariant density."""

from .forward import (
    DegenerateInputError,
    DensityMatrix,
    ForwardState,
    brute_force_log_likelihood,
    density_matrix,
    forward_init,
    forward_step,
    log_likelihood,
    matrix_log_likelihood,
    per_step_log_ratios,
)
from .fredholm import (
    DivergenceResult,
    GridSpec,
    GridTooCoarseError,
    InvariantDensityGrid,
    KernelMatrix,
    NonConvergenceError,
    build_kernel,
    divergence_fredholm,
    j_alpha,
    j_log,
    noncentral_chisq1_cdf,
    q_four_state,
    q_two_state,
    solve_invariant,
)
from .models import (
    FourStateChain,
    LinearGaussianChain,
    ModelAParams,
    ModelBParams,
    PathSample,
    TransitionMatrix,
    as_chain,
    emission_density,
    lift_four_state,
    sample_path,
    stationary_distribution,
    transition_matrix,
    validate_model,
)
from .montecarlo import (
    DivergenceEstimate,
    McConfig,
    estimate_from_log_ratios,
    estimate_kl_mc,
    estimate_renyi_mc,
    replication_log_ratios,
)
from .cli import (
    CaseSpec,
    ConfigError,
    ResultRow,
    default_config,
    load_config,
    parse_config,
    reproduce_table,
    run_case,
    run_cases,
    serialize_config,
)

__version__ = "0.1.0"

__all__ = [
    "CaseSpec",
    "ConfigError",
    "DegenerateInputError",
    "DensityMatrix",
    "DivergenceEstimate",
    "DivergenceResult",
    "ForwardState",
    "FourStateChain",
    "GridSpec",
    "GridTooCoarseError",
    "InvariantDensityGrid",
    "KernelMatrix",
    "LinearGaussianChain",
    "McConfig",
    "ModelAParams",
    "ModelBParams",
    "NonConvergenceError",
    "PathSample",
    "ResultRow",
    "TransitionMatrix",
    "as_chain",
    "brute_force_log_likelihood",
    "build_kernel",
    "default_config",
    "density_matrix",
    "divergence_fredholm",
    "emission_density",
    "estimate_from_log_ratios",
    "estimate_kl_mc",
    "estimate_renyi_mc",
    "forward_init",
    "forward_step",
    "j_alpha",
    "j_log",
    "lift_four_state",
    "load_config",
    "log_likelihood",
    "matrix_log_likelihood",
    "noncentral_chisq1_cdf",
    "parse_config",
    "per_step_log_ratios",
    "q_four_state",
    "q_two_state",
    "replication_log_ratios",
    "reproduce_table",
    "run_case",
    "run_cases",
    "sample_path",
    "serialize_config",
    "stationary_distribution",
    "transition_matrix",
    "validate_model",
]
