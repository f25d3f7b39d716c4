"""Stationary autonomous stochastic LPV state-space realization toolkit.

Core objects are plain dataclasses over numpy arrays: AsLpvSsa for the
stochastic model, DLpvSsa for its deterministic carrier, SchedulingSpec for
the scheduling second moments. On top of those the package provides
simulation, covariance (sub-Markov) computation, minimality and stable
invertability checks, two minimization routes, and an isomorphism finder.
"""
from .algebra import (
    format_word,
    invariant_closure,
    ms_stability_matrix,
    parse_word,
    spectral_radius,
    word_product,
    words_up_to,
)
from .benchmarks import (
    BENCHMARK_IDS,
    alt_scheduling,
    benchmark_model,
    default_scheduling,
    load_benchmark,
)
from .deterministic import (
    KalmanResult,
    MinimalityReport,
    find_isomorphism,
    is_minimal_dlpv,
    kalman_minimize,
    markov_distance,
    observability_matrix,
    reachability_matrix,
    sub_markov,
    sub_markov_table,
    transform_D,
    transform_F,
)
from .errors import ConvergenceError, NoiseDegeneracyError
from .models import (
    AsLpvSsa,
    DLpvSsa,
    SchedulingSpec,
    ValidationReport,
    aslpv_from_dict,
    aslpv_to_dict,
    change_basis,
    change_basis_dlpv,
    load_model,
    load_scheduling,
    save_model,
    save_scheduling,
    validate_aslpv,
)
from .simulation import (
    Trajectory,
    compare_outputs,
    empirical_psi,
    gen_scheduling,
    innovation_filter,
    load_trajectory_csv,
    save_trajectory_csv,
    simulate,
    simulate_system,
)
from .stochastic import (
    Algorithm1Result,
    Algorithm2Result,
    associated_aslpv,
    associated_dlpv,
    check_minimal_innovation,
    innovation_triple,
    is_stably_invertable,
    minimize_algorithm1,
    minimize_algorithm2,
    psi_y_model,
    psi_y_model_table,
    state_second_moments,
)

__version__ = "0.1.0"

__all__ = [
    "AsLpvSsa",
    "DLpvSsa",
    "SchedulingSpec",
    "ValidationReport",
    "Trajectory",
    "KalmanResult",
    "MinimalityReport",
    "Algorithm1Result",
    "Algorithm2Result",
    "ConvergenceError",
    "NoiseDegeneracyError",
    "BENCHMARK_IDS",
    "alt_scheduling",
    "aslpv_from_dict",
    "aslpv_to_dict",
    "associated_aslpv",
    "associated_dlpv",
    "benchmark_model",
    "change_basis",
    "change_basis_dlpv",
    "check_minimal_innovation",
    "compare_outputs",
    "default_scheduling",
    "empirical_psi",
    "find_isomorphism",
    "format_word",
    "gen_scheduling",
    "innovation_filter",
    "innovation_triple",
    "invariant_closure",
    "is_minimal_dlpv",
    "is_stably_invertable",
    "kalman_minimize",
    "load_benchmark",
    "load_model",
    "load_scheduling",
    "load_trajectory_csv",
    "markov_distance",
    "minimize_algorithm1",
    "minimize_algorithm2",
    "ms_stability_matrix",
    "observability_matrix",
    "parse_word",
    "psi_y_model",
    "psi_y_model_table",
    "reachability_matrix",
    "save_model",
    "save_scheduling",
    "save_trajectory_csv",
    "simulate",
    "simulate_system",
    "spectral_radius",
    "state_second_moments",
    "sub_markov",
    "sub_markov_table",
    "transform_D",
    "transform_F",
    "validate_aslpv",
    "word_product",
    "words_up_to",
]
