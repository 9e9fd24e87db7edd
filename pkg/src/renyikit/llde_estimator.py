"""Local-Gaussian density estimation and the debiased k-LNN estimator.

Around each sample point a Gaussian is fitted to the truncated neighbor set
by weighted moments (weights exp(-||X_j - X_i||^2 / (2 rho^2)), bandwidth
rho = rho_{k,i}):

    S0 = sum w_j,  S1 = sum w_j u_j,  S2 = sum w_j u_j u_j^T,
    u_j = (X_j - X_i) / rho,   mu = S1/S0,   Sigma = S2/S0 - mu mu^T,

    fhat(X_i) = S0 / (n (2 pi)^(d/2) rho^d |Sigma|^(1/2))
                * exp(-mu^T Sigma^{-1} mu / 2).

Against the plain kernel estimate (mu pinned at 0, Sigma pinned at I) the
fitted mean and covariance track local structure, which is what cuts the
bias near a support boundary or low-dimensional sheet.  The k-LNN estimate
of J_alpha is the resubstitution mean of fhat^(alpha-1) divided by the
local-Gaussian debiasing constant from bias_mc.

A weighted covariance of m neighbors has rank at most m-1, so Sigma is
singular whenever m <= d (and near-singular for collinear neighborhoods);
the estimator then adds a relative ridge and reports how many points
needed it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bias_mc import RIDGE_SCALE, BiasEntry
from .errors import AlphaOne, SingularSigma
from .kde_estimator import (
    EstimateResult,
    EstimatorConfig,
    _check_bias,
    _power_terms,
    as_index,
    renyi_from_J,
)
from .neighbors import NeighborIndex, truncation_size


@dataclass(frozen=True)
class LocalMoments:
    """Weighted local moments at one sample point (bandwidth-standardized)."""

    s0: float
    s1: np.ndarray
    s2: np.ndarray
    regularized: bool

    @property
    def mu(self):
        return self.s1 / self.s0

    @property
    def sigma(self):
        """Fitted covariance, ridge-regularized when near-singular."""
        raw = self.s2 / self.s0 - np.outer(self.mu, self.mu)
        if self.regularized:
            d = len(self.s1)
            raw = raw + _ridge(raw, d) * np.eye(d)
        return raw


def _ridge(sigma, d):
    return RIDGE_SCALE * max(1.0, float(np.trace(sigma)) / d)


def _raw_moments(index: NeighborIndex, i, k):
    n = index.n
    m = truncation_size(n, k)
    nl = index.knn(i, m)
    rho = nl.distances[k - 1]
    u = (index.dataset.points[nl.indices] - index.dataset.points[i]) / rho
    w = np.exp(-0.5 * (nl.distances / rho) ** 2)
    s0 = float(w.sum())
    s1 = u.T @ w
    s2 = (u * w[:, None]).T @ u
    return s0, s1, s2, rho


def local_moments(index: NeighborIndex, i, k) -> LocalMoments:
    """Weighted moments of the truncated neighbor set of sample i."""
    s0, s1, s2, _ = _raw_moments(index, i, k)
    d = index.d
    mu = s1 / s0
    sigma = s2 / s0 - np.outer(mu, mu)
    regularized = bool(np.linalg.eigvalsh(sigma)[0] < _ridge(sigma, d))
    return LocalMoments(s0=s0, s1=s1, s2=s2, regularized=regularized)


def llde_density_at(index: NeighborIndex, i, k, regularize=True):
    """Local-Gaussian density estimate at sample i."""
    s0, s1, s2, rho = _raw_moments(index, i, k)
    d, n = index.d, index.n
    mu = s1 / s0
    sigma = s2 / s0 - np.outer(mu, mu)
    vals, vecs = np.linalg.eigh(sigma)
    ridge = _ridge(sigma, d)
    if vals[0] < ridge:
        if not regularize:
            raise SingularSigma(
                f"local covariance at point {i} is numerically singular "
                f"(min eigenvalue {vals[0]:.3e})"
            )
        vals = vals + ridge
    y = vecs.T @ mu
    quad = float(np.sum(y * y / vals))
    root_det = math.sqrt(float(np.prod(vals)))
    return float(
        s0 / (n * (2.0 * math.pi) ** (d / 2.0) * rho**d * root_det)
        * math.exp(-0.5 * quad)
    )


def llde_densities(index: NeighborIndex, k):
    """Vectorized local-Gaussian densities at every sample point.

    Returns (densities, regularized_count).
    """
    n, d = index.n, index.d
    m = truncation_size(n, k)
    idx, dist = index.knn_all(m)
    rho = dist[:, k - 1]
    pts = index.dataset.points
    u = (pts[idx] - pts[:, None, :]) / rho[:, None, None]
    w = np.exp(-0.5 * (dist / rho[:, None]) ** 2)
    s0 = w.sum(axis=1)
    s1 = np.einsum("nm,nmd->nd", w, u)
    s2 = np.einsum("nm,nmd,nme->nde", w, u, u)
    mu = s1 / s0[:, None]
    sigma = s2 / s0[:, None, None] - np.einsum("nd,ne->nde", mu, mu)
    vals, vecs = np.linalg.eigh(sigma)
    trace = np.einsum("ndd->n", sigma)
    ridge = RIDGE_SCALE * np.maximum(1.0, trace / d)
    reg = vals[:, 0] < ridge
    vals = np.where(reg[:, None], vals + ridge[:, None], vals)
    y = np.einsum("ned,ne->nd", vecs, mu)  # vecs^T mu per point
    quad = np.sum(y * y / vals, axis=1)
    root_det = np.sqrt(np.prod(vals, axis=1))
    densities = (
        s0 / (n * (2.0 * math.pi) ** (d / 2.0) * rho**d * root_det)
        * np.exp(-0.5 * quad)
    )
    return densities, int(np.count_nonzero(reg))


def estimate_J_klnn(data, config: EstimatorConfig, bias: BiasEntry) -> EstimateResult:
    """Debiased k-LNN resubstitution estimate of J_alpha."""
    index = as_index(data)
    _check_bias(bias, "llde", config.k, index.d, config.alpha, None, index.n)
    if index.n < config.k + 1:
        raise ValueError(f"need n >= k+1 = {config.k + 1} samples, have {index.n}")
    densities, reg_count = llde_densities(index, config.k)
    terms, cap_hits = _power_terms(densities, config.alpha, config.h_cap)
    value = float(np.mean(terms)) / bias.bias
    return EstimateResult(
        value=value, method="klnn", n=index.n, d=index.d, k=config.k,
        alpha=config.alpha, kernel=None, bias=bias.bias,
        cap_hits=cap_hits, regularized_points=reg_count,
        per_point_terms=terms if config.keep_terms else None,
    )


def estimate_H_klnn(data, config: EstimatorConfig, bias: BiasEntry) -> EstimateResult:
    """Renyi entropy of order alpha from the debiased k-LNN J estimate."""
    if config.alpha == 1.0:
        raise AlphaOne("Renyi entropy of this order is undefined at alpha=1")
    return renyi_from_J(estimate_J_klnn(data, config, bias), "klnn")
