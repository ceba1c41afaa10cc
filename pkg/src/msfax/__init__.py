"""Joint estimation of shared and study-specific gaussian graphical
models across studies via a constrained multi-study factor model.

The covariance of study s is decomposed as Phi Phi' + Lambda_s Lambda_s'
+ diag(psi_s); shared and study-specific precision matrices follow from
the pieces, and their partial correlations define the networks.
"""

from ._kernels import BACKEND
from .benchmark import (
    BenchmarkResult,
    BicSelection,
    GlassoFit,
    GlassoOptions,
    benchmark_networks,
    bic_select,
    graphical_lasso,
    kkt_residual,
)
from .core import (
    GgmNetwork,
    IdentifiabilityReport,
    InfeasibleFactorsError,
    MsfaxError,
    MsfaxModel,
    MultiStudyDataset,
    NetworkSet,
    SingularCovarianceError,
    validate_identifiability,
)
from .decompose import (
    networks_from_fit,
    partial_correlations,
    precisions_from_model,
    shared_precision,
    split_noise,
    study_precision,
)
from .ecm import EcmFit, EcmOptions, fit_msfa, observed_loglik
from .factors import FactorCountEstimate, cng_scree, estimate_factor_counts
from .metrics import (
    cosine_similarity,
    evaluate_networks,
    matrix_rv,
    relative_euclidean,
    summarize,
)
from .netstats import (
    covariate_residualize,
    fisher_threshold,
    hub_scores,
    log_ratio_preprocess,
    threshold_network,
)
from .simulate import (
    BUILTIN_SETTINGS,
    SimulationSetting,
    builtin_setting,
    generate_dataset,
    generate_loadings,
    generate_model,
    setting_model,
)
from .study import StudyPlan, run_replicate, run_study

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BenchmarkResult",
    "BicSelection",
    "BUILTIN_SETTINGS",
    "EcmFit",
    "EcmOptions",
    "FactorCountEstimate",
    "GgmNetwork",
    "GlassoFit",
    "GlassoOptions",
    "IdentifiabilityReport",
    "InfeasibleFactorsError",
    "MsfaxError",
    "MsfaxModel",
    "MultiStudyDataset",
    "NetworkSet",
    "SimulationSetting",
    "SingularCovarianceError",
    "StudyPlan",
    "benchmark_networks",
    "bic_select",
    "builtin_setting",
    "cng_scree",
    "cosine_similarity",
    "covariate_residualize",
    "estimate_factor_counts",
    "evaluate_networks",
    "fisher_threshold",
    "fit_msfa",
    "generate_dataset",
    "generate_loadings",
    "generate_model",
    "graphical_lasso",
    "hub_scores",
    "kkt_residual",
    "log_ratio_preprocess",
    "matrix_rv",
    "networks_from_fit",
    "observed_loglik",
    "partial_correlations",
    "precisions_from_model",
    "relative_euclidean",
    "run_replicate",
    "run_study",
    "setting_model",
    "shared_precision",
    "split_noise",
    "study_precision",
    "summarize",
    "threshold_network",
    "validate_identifiability",
    "__version__",
]
