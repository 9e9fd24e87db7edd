"""Normalized radial kernels and the unit-ball volume constant.

All three families are radially symmetric and integrate to 1 over R^d in
their stated normalization:

    gaussian      (2*pi)^(-d/2) * exp(-||u||^2 / 2)
    uniform       1/c_d                 for ||u|| <= 1
    epanechnikov  (d+2)/(2*c_d) * (1 - ||u||^2)   for ||u|| <= 1

where c_d = pi^(d/2) / Gamma(d/2 + 1) is the volume of the unit ball.
The optional `scale` multiplier produces the kernel c*K used by the
scale-cancellation tests; it is not part of any persisted key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

FAMILIES = ("gaussian", "uniform", "epanechnikov")


def unit_ball_volume(d):
    """Volume of the unit Euclidean ball in R^d: pi^(d/2) / Gamma(d/2 + 1)."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


@dataclass(frozen=True)
class KernelSpec:
    """A normalized kernel family bound to a dimension."""

    family: str
    d: int
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(
                f"unknown kernel family {self.family!r}; expected one of {FAMILIES}"
            )
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if not (self.scale > 0):
            raise ValueError("kernel scale must be positive")

    def profile(self, r):
        """Kernel value at radius r (vectorized); K(u) depends on u only
        through ||u|| = r."""
        r = np.asarray(r, dtype=float)
        if self.family == "gaussian":
            out = (2.0 * math.pi) ** (-self.d / 2.0) * np.exp(-0.5 * r * r)
        elif self.family == "uniform":
            out = np.where(r <= 1.0, 1.0 / unit_ball_volume(self.d), 0.0)
        else:  # epanechnikov
            norm = (self.d + 2.0) / (2.0 * unit_ball_volume(self.d))
            out = np.where(r <= 1.0, norm * (1.0 - r * r), 0.0)
        return out * self.scale

    def eval(self, u):
        """Kernel value at a point u in R^d."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.d,):
            raise DimensionMismatch(
                f"expected a vector of dimension {self.d}, got shape {u.shape}"
            )
        if not np.all(np.isfinite(u)):
            raise ValueError("kernel argument must be finite")
        return float(self.profile(np.linalg.norm(u)))
