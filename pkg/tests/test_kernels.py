import math

import numpy as np
import pytest

from renyikit.errors import DimensionMismatch
from renyikit.kernels import FAMILIES, KernelSpec, unit_ball_volume

from conftest import random_rotation


def test_unit_ball_volumes():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)


def test_gaussian_peak_1d():
    k = KernelSpec("gaussian", 1)
    assert k.eval(np.zeros(1)) == pytest.approx((2 * math.pi) ** -0.5)


def test_uniform_disk_value():
    k = KernelSpec("uniform", 2)
    assert k.eval(np.array([0.5, 0.0])) == pytest.approx(1.0 / math.pi)
    assert k.eval(np.array([1.5, 0.0])) == 0.0


def test_epanechnikov_peak_1d():
    k = KernelSpec("epanechnikov", 1)
    assert k.eval(np.zeros(1)) == pytest.approx(0.75)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("d", [1, 2])
def test_normalization_by_quadrature(family, d):
    # grid integration over a generous box; Gaussian tails beyond |u|=10
    # contribute < 1e-20
    k = KernelSpec(family, d)
    grid = np.linspace(-10, 10, 2001)
    if d == 1:
        vals = k.profile(np.abs(grid))
        total = np.trapezoid(vals, grid)
    else:
        xx, yy = np.meshgrid(grid, grid)
        vals = k.profile(np.hypot(xx, yy))
        step = grid[1] - grid[0]
        total = vals.sum() * step * step
    assert total == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("d", [2, 3, 6])
def test_radial_symmetry_under_rotation(family, d):
    rng = np.random.default_rng(5)
    k = KernelSpec(family, d)
    for _ in range(20):
        u = rng.standard_normal(d)
        rot = random_rotation(d, rng)
        assert k.eval(rot @ u) == pytest.approx(k.eval(u), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_gaussian_tail_dominated_by_power(d):
    # K(u) * ||u||^(2d) stays below 1 on ||u|| in [1, 50]
    k = KernelSpec("gaussian", d)
    radii = np.linspace(1.0, 50.0, 2000)
    assert np.max(k.profile(radii) * radii ** (2 * d)) < 1.0


def test_eval_rejects_wrong_dimension():
    with pytest.raises(DimensionMismatch):
        KernelSpec("gaussian", 2).eval(np.zeros(3))


def test_unknown_family_rejected():
    with pytest.raises(ValueError):
        KernelSpec("tricube", 1)


def test_scale_multiplies_values():
    base = KernelSpec("gaussian", 2)
    doubled = KernelSpec("gaussian", 2, scale=2.0)
    r = np.array([0.0, 0.3, 1.7])
    np.testing.assert_array_equal(doubled.profile(r), 2.0 * base.profile(r))
