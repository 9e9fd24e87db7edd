"""Synthetic benchmark distributions, closed-form targets, and a quadrature
oracle that certifies them.

Three families, all with unit marginal variances:

  gauss2d(r)       N(0, [[1, r], [r, 1]])
  gauss6d-block(r) six dimensions, three independent 2-d blocks with
                   correlation r each
  mixture2d(r)     equal mixture of gauss2d(r) and gauss2d(-r)

Closed forms (from the Gaussian product identity
int N(0,A) N(0,B) = (2 pi)^(-d/2) |A+B|^(-1/2)):

  gauss2d,       alpha=2:  1 / (4 pi sqrt(1-r^2))
  gauss2d,       alpha=3:  1 / (12 pi^2 (1-r^2))
  gauss6d-block, alpha=2:  (4 pi sqrt(1-r^2))^(-3)
  mixture2d,     alpha=2:  1 / (8 pi sqrt(1-r^2)) + 1 / (8 pi)

The oracle integrates f^alpha numerically (tensor Gauss-Legendre on the
density's principal axes, refined until two successive orders agree), so
the closed forms above can be checked against an independent route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bias_mc import substream
from .errors import BadCorrelation, NonConvergence, UnsupportedPair
from .neighbors import Dataset

FAMILIES = ("gauss2d", "gauss6d-block", "mixture2d")


def family_dim(family):
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    return 6 if family == "gauss6d-block" else 2


def _check_r(r):
    if not abs(r) < 1.0:
        raise BadCorrelation(f"need |r| < 1, got r={r}")


@dataclass(frozen=True)
class ExperimentSpec:
    """One synthetic-benchmark configuration (a single sweep point)."""

    family: str
    alpha: float
    r: float
    n: int
    trials: int
    seed: int

    def __post_init__(self):
        family_dim(self.family)
        _check_r(self.r)
        if self.n < 10:
            raise ValueError("n must be >= 10")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    @property
    def d(self):
        return family_dim(self.family)


def _cov2(r):
    return np.array([[1.0, r], [r, 1.0]])


def sample(spec: ExperimentSpec, trial) -> Dataset:
    """Draw the n points of one trial; deterministic per (seed, trial).

    The mixture's component choices use their own substream, so the
    underlying Gaussian draws are identical across families and r values
    (common random numbers across sweep points).
    """
    rng = substream(spec.seed, trial, stream=0)
    n, r = spec.n, spec.r
    if spec.family == "gauss2d":
        chol = np.linalg.cholesky(_cov2(r))
        pts = rng.standard_normal((n, 2)) @ chol.T
    elif spec.family == "gauss6d-block":
        cov = np.zeros((6, 6))
        for b in range(3):
            cov[2 * b : 2 * b + 2, 2 * b : 2 * b + 2] = _cov2(r)
        chol = np.linalg.cholesky(cov)
        pts = rng.standard_normal((n, 6)) @ chol.T
    else:  # mixture2d
        z = rng.standard_normal((n, 2))
        comp = substream(spec.seed, trial, stream=1).integers(0, 2, size=n)
        chol_pos = np.linalg.cholesky(_cov2(r))
        chol_neg = np.linalg.cholesky(_cov2(-r))
        pts = np.where((comp == 0)[:, None], z @ chol_pos.T, z @ chol_neg.T)
    return Dataset(
        pts,
        source=f"{spec.family}(r={spec.r:g}) n={n} seed={spec.seed} trial={trial}",
    )


def ground_truth(family, alpha, r):
    """Closed-form J_alpha for the supported (family, alpha) pairs."""
    family_dim(family)
    _check_r(r)
    one_minus = 1.0 - r * r
    if family == "gauss2d" and alpha == 2:
        return 1.0 / (4.0 * math.pi * math.sqrt(one_minus))
    if family == "gauss2d" and alpha == 3:
        return 1.0 / (12.0 * math.pi**2 * one_minus)
    if family == "gauss6d-block" and alpha == 2:
        return (4.0 * math.pi * math.sqrt(one_minus)) ** -3.0
    if family == "mixture2d" and alpha == 2:
        return 1.0 / (8.0 * math.pi * math.sqrt(one_minus)) + 1.0 / (8.0 * math.pi)
    raise UnsupportedPair(f"no closed form for ({family}, alpha={alpha})")


def density_2d(family, r):
    """Callable f(points (N,2)) -> densities for the two 2-d families."""
    _check_r(r)

    def gauss_pdf(cov):
        inv = np.linalg.inv(cov)
        norm = 1.0 / (2.0 * math.pi * math.sqrt(np.linalg.det(cov)))

        def pdf(x):
            q = np.einsum("nd,de,ne->n", x, inv, x)
            return norm * np.exp(-0.5 * q)

        return pdf

    if family == "gauss2d":
        return gauss_pdf(_cov2(r))
    if family == "mixture2d":
        pos, neg = gauss_pdf(_cov2(r)), gauss_pdf(_cov2(-r))
        return lambda x: 0.5 * pos(x) + 0.5 * neg(x)
    raise UnsupportedPair(f"no 2-d density for family {family!r}")


def quadrature_oracle(family, r, alpha, rtol=1e-6):
    """int f^alpha by tensor Gauss-Legendre, refined until two successive
    orders agree to rtol; independent of the closed forms above.

    The grid lives on the density's principal axes (the (1,1)/(1,-1)
    diagonals for both families) and spans 8 standard deviations per axis.
    """
    f = density_2d(family, r)
    # principal axes shared by both components; widest std over components
    axes = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    if family == "mixture2d":
        stds = (math.sqrt(1.0 + abs(r)), math.sqrt(1.0 + abs(r)))
    else:
        stds = (math.sqrt(1.0 + r), math.sqrt(1.0 - r))
    half = [8.0 * s for s in stds]
    prev = None
    for order in (64, 128, 256, 512, 1024):
        nodes_u, wts_u = np.polynomial.legendre.leggauss(order)
        u = nodes_u * half[0]
        v = nodes_u * half[1]
        wu = wts_u * half[0]
        wv = wts_u * half[1]
        grid = u[:, None, None] * axes[0] + v[None, :, None] * axes[1]
        vals = f(grid.reshape(-1, 2)).reshape(order, order) ** alpha
        total = float(wu @ vals @ wv)
        if prev is not None and abs(total - prev) <= rtol * abs(total):
            return total
        prev = total
    raise NonConvergence(
        f"quadrature did not reach rtol={rtol} for ({family}, r={r}, alpha={alpha})"
    )
