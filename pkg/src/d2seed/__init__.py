"""d2seed: squared-distance seeding for k-means with sample-query trees.

The package provides tree-backed sampling structures (`SqVector`, `SqMatrix`),
composable oversampling handles (`DistanceOsq`, `MinOsq`), rejection sampling
and norm estimation on top of them, seeding algorithms (`kmeanspp`,
`qi_kmeanspp`, `qi_noisy_kmeanspp`, `afk_mc2`, `pseudo_approx_2k`), an
enumeration-based (1+eps) refinement (`approx_scheme`), small-instance
brute-force oracles, and a report/CLI layer.
"""

from .data import (
    AspectReport,
    DataFormatError,
    DataSet,
    aspect_ratio,
    gaussian_mixture,
    load_csv,
    load_raw,
    scale_to_unit_min_distance,
    store_raw,
)
from .sqtree import SqMatrix, SqVector, build_matrix
from .osq import (
    ArrayOsq,
    DistanceOsq,
    MinOsq,
    OsqHandle,
    RejectionOutcome,
    SamplingExhausted,
    default_trial_budget,
    estimate_norm2,
    oversampling_factor,
    rejection_sample,
    rejection_sample_batch,
)
from .approx_ip import IpEstimatorConfig, NoisyDistanceOsq, approx_distance, estimate_inner
from .seeding import (
    SeedingResult,
    afk_mc2,
    build_seeding_matrix,
    estimate_phi_bound,
    kmeanspp,
    pseudo_approx_2k,
    qi_kmeanspp,
    qi_noisy_kmeanspp,
)
from .approx_scheme import (
    CandidateList,
    EnumerationBudgetError,
    SchemeParams,
    SchemeResult,
    approx_scheme,
    best_center_set,
    enumerate_candidates,
)
from .oracle import (
    DiscreteDistribution,
    empirical_distribution,
    exact_cost,
    exact_d2_distribution,
    exact_d2_weights,
    optimal_kmeans_bruteforce,
    tv_distance,
)
from .report import Report, read_report, render_report, strip_timing, write_report

__version__ = "0.1.0"

__all__ = [
    "AspectReport",
    "ArrayOsq",
    "CandidateList",
    "DataFormatError",
    "DataSet",
    "DiscreteDistribution",
    "DistanceOsq",
    "EnumerationBudgetError",
    "IpEstimatorConfig",
    "MinOsq",
    "NoisyDistanceOsq",
    "OsqHandle",
    "RejectionOutcome",
    "Report",
    "SamplingExhausted",
    "SchemeParams",
    "SchemeResult",
    "SeedingResult",
    "SqMatrix",
    "SqVector",
    "afk_mc2",
    "approx_distance",
    "approx_scheme",
    "aspect_ratio",
    "best_center_set",
    "build_matrix",
    "build_seeding_matrix",
    "default_trial_budget",
    "empirical_distribution",
    "enumerate_candidates",
    "estimate_inner",
    "estimate_norm2",
    "estimate_phi_bound",
    "exact_cost",
    "exact_d2_distribution",
    "exact_d2_weights",
    "gaussian_mixture",
    "kmeanspp",
    "load_csv",
    "load_raw",
    "optimal_kmeans_bruteforce",
    "oversampling_factor",
    "pseudo_approx_2k",
    "qi_kmeanspp",
    "qi_noisy_kmeanspp",
    "read_report",
    "rejection_sample",
    "rejection_sample_batch",
    "render_report",
    "scale_to_unit_min_distance",
    "store_raw",
    "strip_timing",
    "tv_distance",
    "write_report",
]
