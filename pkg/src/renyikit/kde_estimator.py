"""Debiased density-power estimation with kernel density + k-NN bandwidth.

Per sample point the density is estimated with a kernel whose bandwidth is
the distance rho_{k,i} to the point's k-th nearest neighbor, summing only
over the m = max(k, ceil(ln n)) nearest samples:

    fhat(X_i) = (1 / (n rho^d)) * sum_{j in T_i} K((X_j - X_i) / rho).

The integral J_alpha = int f^alpha is then the resubstitution mean of
fhat^(alpha-1), divided by the precomputed constant B = E[Z^(alpha-1)]
(bias_mc) that removes the asymptotic multiplicative bias of the fixed-k
bandwidth choice.  The Renyi entropy follows as log(J)/(1-alpha).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bias_mc import BiasEntry
from .errors import AlphaOne, BiasMismatch, NonFinite, NonPositiveJ
from .kernels import KernelSpec
from .neighbors import Dataset, NeighborIndex, build_index, truncation_size

DEFAULT_H_CAP = 1e12


@dataclass(frozen=True)
class EstimatorConfig:
    """Shared knobs for the resubstitution estimators.

    h_cap bounds each per-point density value before exponentiation (the
    functional must stay bounded); at sane scales it never binds, and the
    number of capped points is reported on the result.
    """

    k: int
    alpha: float
    kernel: KernelSpec | None = None
    h_cap: float = DEFAULT_H_CAP
    keep_terms: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        if not self.h_cap > 0:
            raise ValueError("h_cap must be positive")


@dataclass(frozen=True)
class EstimateResult:
    """A scalar estimate with its full configuration echo."""

    value: float
    method: str
    n: int
    d: int
    k: int
    alpha: float
    kernel: str | None = None
    bias: float | None = None
    seed: int | None = None
    cap_hits: int = 0
    regularized_points: int = 0
    per_point_terms: np.ndarray | None = None


def as_index(data) -> NeighborIndex:
    """Accept either a Dataset or a prebuilt NeighborIndex."""
    if isinstance(data, NeighborIndex):
        return data
    if isinstance(data, Dataset):
        return build_index(data)
    raise TypeError(f"expected Dataset or NeighborIndex, got {type(data)!r}")


def _check_bias(bias: BiasEntry, estimator, k, d, alpha, kernel_family, n):
    got = (bias.estimator, bias.k, bias.d, float(bias.alpha), bias.kernel)
    want = (estimator, k, d, float(alpha), kernel_family)
    if got != want:
        raise BiasMismatch(f"bias entry {got} does not match config {want}")
    m = truncation_size(n, k)
    if bias.m_trunc != m:
        # A constant computed at a different truncation level debiases a
        # different estimator; refuse rather than silently mis-scale.
        raise BiasMismatch(
            f"bias entry was computed at m_trunc={bias.m_trunc} but the "
            f"estimator truncates at m={m} for n={n}, k={k}"
        )


def kde_densities(index: NeighborIndex, kernel: KernelSpec, k):
    """k-NN-bandwidth kernel density estimates at every sample point."""
    n, d = index.n, index.d
    m = truncation_size(n, k)
    _, dist = index.knn_all(m)
    rho = dist[:, k - 1]
    kernel_sums = kernel.profile(dist / rho[:, None]).sum(axis=1)
    return kernel_sums / (n * rho**d)


def kde_density_at(index: NeighborIndex, kernel: KernelSpec, k, i):
    """Density estimate at sample i: truncated kernel sum over the
    m = max(k, ceil(ln n)) nearest samples with bandwidth rho_{k,i}."""
    n, d = index.n, index.d
    m = truncation_size(n, k)
    nl = index.knn(i, m)
    rho = nl.distances[k - 1]
    return float(kernel.profile(nl.distances / rho).sum() / (n * rho**d))


def _power_terms(densities, alpha, h_cap):
    """Capped per-point terms density^(alpha-1); errors on 0^(negative)."""
    capped = np.minimum(densities, h_cap)
    cap_hits = int(np.count_nonzero(densities > h_cap))
    if alpha < 1.0 and np.any(capped <= 0.0):
        i = int(np.nonzero(capped <= 0.0)[0][0])
        raise NonFinite(
            f"density at point {i} is 0 and alpha={alpha} < 1 makes the "
            "term infinite", trial=i,
        )
    terms = capped ** (alpha - 1.0)
    if not np.all(np.isfinite(terms)):
        i = int(np.nonzero(~np.isfinite(terms))[0][0])
        raise NonFinite(f"per-point term {i} is not finite", trial=i)
    return terms, cap_hits


def estimate_J_kde(data, config: EstimatorConfig, bias: BiasEntry) -> EstimateResult:
    """Debiased resubstitution estimate of J_alpha via KDE with k-NN bandwidth."""
    index = as_index(data)
    if config.kernel is None:
        raise ValueError("config.kernel is required for the kde method")
    _check_bias(bias, "kde", config.k, index.d, config.alpha,
                config.kernel.family, index.n)
    if index.n < config.k + 1:
        raise ValueError(f"need n >= k+1 = {config.k + 1} samples, have {index.n}")
    densities = kde_densities(index, config.kernel, config.k)
    terms, cap_hits = _power_terms(densities, config.alpha, config.h_cap)
    value = float(np.mean(terms)) / bias.bias
    return EstimateResult(
        value=value, method="kde", n=index.n, d=index.d, k=config.k,
        alpha=config.alpha, kernel=config.kernel.family, bias=bias.bias,
        cap_hits=cap_hits,
        per_point_terms=terms if config.keep_terms else None,
    )


def renyi_from_J(result: EstimateResult, method) -> EstimateResult:
    """log(J)/(1-alpha) with the configuration echo carried over."""
    if result.alpha == 1.0:
        raise AlphaOne("Renyi entropy of this order is undefined at alpha=1")
    if not result.value > 0.0:
        raise NonPositiveJ(f"cannot take log of J = {result.value}")
    value = math.log(result.value) / (1.0 - result.alpha)
    return EstimateResult(
        value=value, method=method, n=result.n, d=result.d, k=result.k,
        alpha=result.alpha, kernel=result.kernel, bias=result.bias,
        seed=result.seed, cap_hits=result.cap_hits,
        regularized_points=result.regularized_points,
        per_point_terms=result.per_point_terms,
    )


def estimate_H_kde(data, config: EstimatorConfig, bias: BiasEntry) -> EstimateResult:
    """Renyi entropy of order alpha from the debiased KDE-path J estimate."""
    if config.alpha == 1.0:
        raise AlphaOne("Renyi entropy of this order is undefined at alpha=1")
    return renyi_from_J(estimate_J_kde(data, config, bias), "kde")
