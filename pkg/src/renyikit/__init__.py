"""Estimation of density-power integrals J_alpha = int f^alpha and Renyi
entropies from i.i.d. samples, via debiased resubstitution estimators with
k-nearest-neighbor bandwidths."""

from .baselines import estimate_J_kde_fixed, estimate_J_leonenko
from .bias_mc import (
    BiasEntry,
    BiasTable,
    OrderStatSample,
    bias_kde,
    bias_llde,
    load_default_table,
    load_table,
    reciprocal_moment_kde,
    reciprocal_moment_llde,
    sample_order_stats,
    store_table,
    substream,
)
from .kde_estimator import (
    EstimateResult,
    EstimatorConfig,
    estimate_H_kde,
    estimate_J_kde,
    kde_density_at,
)
from .kernels import KernelSpec, unit_ball_volume
from .llde_estimator import (
    LocalMoments,
    estimate_H_klnn,
    estimate_J_klnn,
    llde_density_at,
    local_moments,
)
from .neighbors import Dataset, NeighborIndex, build_index, truncation_size
from .synthdata import ExperimentSpec, ground_truth, quadrature_oracle, sample

__version__ = "0.1.0"

__all__ = [
    "BiasEntry", "BiasTable", "Dataset", "EstimateResult", "EstimatorConfig",
    "ExperimentSpec", "KernelSpec", "LocalMoments", "NeighborIndex",
    "OrderStatSample", "bias_kde", "bias_llde", "build_index",
    "estimate_H_kde", "estimate_H_klnn", "estimate_J_kde",
    "estimate_J_kde_fixed", "estimate_J_klnn", "estimate_J_leonenko",
    "ground_truth", "kde_density_at", "llde_density_at", "load_default_table",
    "load_table", "local_moments", "quadrature_oracle",
    "reciprocal_moment_kde", "reciprocal_moment_llde", "sample",
    "sample_order_stats", "store_table", "substream", "truncation_size",
    "unit_ball_volume",
]
