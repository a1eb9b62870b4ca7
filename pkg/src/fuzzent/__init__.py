"""Entropy-regularized fuzzy c-means with adaptive distances.

Twelve partitioning algorithms sharing one three-step alternating optimizer:
non-adaptive squared-Euclidean and City-Block baselines, global/local
Gustafson-Kessel covariance adaptation, and global/local feature weighting
under sum or product constraints.
"""
from .core import (
    AlgorithmSpec,
    Dataset,
    FitResult,
    FuzzyPartition,
    GlobalCov,
    GlobalWeights,
    LocalCov,
    LocalWeights,
    MetricState,
    NoMetric,
    PrototypeSet,
    Termination,
    Variant,
    WeightConstraint,
)
from .data import (
    GaussianClassSpec,
    StandardizeResult,
    generate_config,
    generate_outlier_set,
    ideal_outlier_centers,
    load_csv,
    save_csv,
    standardize,
)
from .engine import (
    DESCRIPTORS,
    MetricScope,
    VariantDescriptor,
    fit,
    objective,
    update_membership,
    update_metric,
    update_prototypes,
)
from .evaluation import (
    HardPartition,
    adjusted_rand_index,
    hard_partition,
    hullermeier_index,
    robustness_detection,
)
from .linalg import (
    SpdResult,
    det_normalized_inverse,
    irls_prototype,
    spd_invert_det,
    stable_normalized_exponentials,
    weighted_median,
)
from .distances import PointwiseKind, mahalanobis, pointwise, weighted_distance
from .tuning import (
    Report,
    ReportRow,
    SweepConfig,
    best_of_restarts,
    min_centroid_distance,
    monte_carlo,
    resolve_params,
    select_tu,
    select_tu_tv,
    sweep_curve,
    tuned_tu_tv,
)

__version__ = "0.1.0"

__all__ = [
    "AlgorithmSpec",
    "Dataset",
    "DESCRIPTORS",
    "FitResult",
    "FuzzyPartition",
    "GaussianClassSpec",
    "GlobalCov",
    "GlobalWeights",
    "HardPartition",
    "LocalCov",
    "LocalWeights",
    "MetricScope",
    "MetricState",
    "NoMetric",
    "PointwiseKind",
    "PrototypeSet",
    "Report",
    "ReportRow",
    "SpdResult",
    "StandardizeResult",
    "SweepConfig",
    "Termination",
    "Variant",
    "VariantDescriptor",
    "WeightConstraint",
    "adjusted_rand_index",
    "best_of_restarts",
    "det_normalized_inverse",
    "fit",
    "generate_config",
    "generate_outlier_set",
    "hard_partition",
    "hullermeier_index",
    "ideal_outlier_centers",
    "irls_prototype",
    "load_csv",
    "mahalanobis",
    "min_centroid_distance",
    "monte_carlo",
    "objective",
    "pointwise",
    "resolve_params",
    "robustness_detection",
    "save_csv",
    "select_tu",
    "select_tu_tv",
    "spd_invert_det",
    "stable_normalized_exponentials",
    "standardize",
    "sweep_curve",
    "tuned_tu_tv",
    "update_membership",
    "update_metric",
    "update_prototypes",
    "weighted_distance",
    "weighted_median",
    "__version__",
]
