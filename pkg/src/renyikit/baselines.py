"""Comparison estimators: classical k-NN and fixed-bandwidth KDE.

Both are resubstitution estimators of J_alpha used as experiment baselines.
The k-NN one is the standard Gamma-corrected form

    J = (1/n) sum_i [(n-1) C_k c_d rho_{k,i}^d]^(1-alpha),
    C_k = [Gamma(k) / Gamma(k+1-alpha)]^(1/(1-alpha)),

and the fixed-bandwidth one is the leave-one-out mean

    J = (1/n) sum_i [(1/((n-1) h^d)) sum_{j != i} K((X_j-X_i)/h)]^(alpha-1)

with h either given or from the Silverman rule
h = sigma_hat * (4 / ((d+2) n))^(1/(d+4)), sigma_hat the mean marginal
standard deviation.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .errors import AlphaOne, InvalidK, ZeroBandwidth
from .kde_estimator import EstimateResult, _power_terms, as_index
from .kernels import KernelSpec, unit_ball_volume

DEFAULT_H_CAP = 1e12


def estimate_J_leonenko(data, k, alpha) -> EstimateResult:
    """Classical k-NN resubstitution estimate of J_alpha."""
    if alpha == 1.0:
        raise AlphaOne("the k-NN baseline is undefined at alpha=1")
    if not k > alpha - 1.0:
        raise InvalidK(f"need k > alpha-1 = {alpha - 1.0}, got k={k}")
    index = as_index(data)
    n, d = index.n, index.d
    if n < k + 1:
        raise ValueError(f"need n >= k+1 = {k + 1} samples, have {n}")
    _, dist = index.knn_all(k)
    rho = dist[:, k - 1]
    log_ck = (gammaln(k) - gammaln(k + 1.0 - alpha)) / (1.0 - alpha)
    c_k = math.exp(log_ck)
    volumes = (n - 1) * c_k * unit_ball_volume(d) * rho**d
    value = float(np.mean(volumes ** (1.0 - alpha)))
    return EstimateResult(value=value, method="leonenko", n=n, d=d, k=k,
                          alpha=alpha)


def silverman_bandwidth(points):
    """h = sigma_hat * (4 / ((d+2) n))^(1/(d+4)), mean marginal std."""
    n, d = points.shape
    sigma = float(np.mean(np.std(points, axis=0, ddof=1)))
    if sigma == 0.0:
        raise ZeroBandwidth("all marginal standard deviations are zero")
    return sigma * (4.0 / ((d + 2.0) * n)) ** (1.0 / (d + 4.0))


def estimate_J_kde_fixed(data, kernel: KernelSpec, alpha, bandwidth="silverman",
                         h_cap=DEFAULT_H_CAP) -> EstimateResult:
    """Fixed-bandwidth leave-one-out KDE resubstitution estimate of J_alpha."""
    index = as_index(data)
    pts = index.dataset.points
    n, d = index.n, index.d
    if bandwidth == "silverman":
        h = silverman_bandwidth(pts)
    else:
        h = float(bandwidth)
        if not h > 0:
            raise ZeroBandwidth(f"bandwidth must be positive, got {h}")
    if alpha == 1.0:
        return EstimateResult(value=1.0, method="kde-fixed", n=n, d=d, k=0,
                              alpha=1.0, kernel=kernel.family)
    densities = np.empty(n)
    block = max(1, int(2e7) // n)
    for start in range(0, n, block):
        stop = min(start + block, n)
        diff = pts[start:stop, None, :] - pts[None, :, :]
        r = np.sqrt(np.einsum("ijd,ijd->ij", diff, diff)) / h
        kv = kernel.profile(r)
        rows = np.arange(start, stop)
        kv[rows - start, rows] = 0.0  # leave-one-out
        densities[start:stop] = kv.sum(axis=1) / ((n - 1) * h**d)
    terms, _ = _power_terms(densities, alpha, h_cap)
    return EstimateResult(value=float(np.mean(terms)), method="kde-fixed",
                          n=n, d=d, k=0, alpha=alpha, kernel=kernel.family)
