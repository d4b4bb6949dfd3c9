"""Shared-component factorial model learning.

Parameter estimation for factorial Gaussian mixtures and factorial HMMs
whose emission blocks share one component: identifiability analysis of
the assignment combinatorics, exact dictionary recovery from sorted
pairwise correlations, sparse decoding of chain states, auxiliary
parameter estimation, an exact-EM baseline, and a benchmark harness.
"""

from .types import (
    SHARED,
    STANDARD,
    AssignmentMatrix,
    CombinationMatrix,
    EmissionMatrix,
    ModelShape,
    RankReport,
)
from .identifiability import (
    build_combination_matrix,
    incoherence_check,
    nullspace_witness,
    numerical_rank,
    verify_identifiability,
)
from .generate import (
    GeneratedData,
    GeneratorConfig,
    emit_observations,
    generate_dataset,
    sample_assignments,
    sample_dictionary,
)
from .cluster import (
    ClusterDiagnostics,
    ClusteredCombinations,
    ClusterOptions,
    concentration_diagnostic,
    estimate_combinations,
)
from .lasso import (
    LassoOptions,
    LassoResult,
    infer_assignments,
    lasso_column,
    lasso_matrix,
)
from .recovery import (
    CorrelationProfile,
    RecoveredDictionary,
    RecoveryOptions,
    correlation_matrix,
    extract_components,
    group_components,
    learn_emissions,
    locate_shared,
)
from .estimate import (
    EstimatedParams,
    estimate_covariance,
    estimate_priors,
    estimate_transitions,
)
from .em import EMConfig, EMResult, em_fit, loglik
from .metrics import dictionary_error, normalized_dictionary_error
from .pipeline import PipelineOptions, PipelineResult, run_pipeline
from .estimators import FactorialMixtureEM, SharedComponentDictionaryLearner
from .bench import BenchmarkConfig, TrialResult, run_benchmark
from . import exceptions

__version__ = "0.1.0"

__all__ = [
    "AssignmentMatrix",
    "BenchmarkConfig",
    "ClusterDiagnostics",
    "ClusterOptions",
    "ClusteredCombinations",
    "CombinationMatrix",
    "CorrelationProfile",
    "EMConfig",
    "EMResult",
    "EmissionMatrix",
    "EstimatedParams",
    "FactorialMixtureEM",
    "GeneratedData",
    "GeneratorConfig",
    "LassoOptions",
    "LassoResult",
    "ModelShape",
    "PipelineOptions",
    "PipelineResult",
    "RankReport",
    "RecoveredDictionary",
    "RecoveryOptions",
    "SHARED",
    "STANDARD",
    "SharedComponentDictionaryLearner",
    "TrialResult",
    "build_combination_matrix",
    "concentration_diagnostic",
    "correlation_matrix",
    "dictionary_error",
    "em_fit",
    "emit_observations",
    "estimate_combinations",
    "estimate_covariance",
    "estimate_priors",
    "estimate_transitions",
    "exceptions",
    "extract_components",
    "generate_dataset",
    "group_components",
    "incoherence_check",
    "infer_assignments",
    "lasso_column",
    "lasso_matrix",
    "learn_emissions",
    "locate_shared",
    "loglik",
    "normalized_dictionary_error",
    "nullspace_witness",
    "numerical_rank",
    "run_benchmark",
    "run_pipeline",
    "sample_assignments",
    "sample_dictionary",
    "verify_identifiability",
]
