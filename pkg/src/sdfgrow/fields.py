"""Analytic distance fields for demos and tests."""

from __future__ import annotations

import numpy as np

from .core import SdfGrid


def circle_sdf(points, center=(0.0, 0.0), radius=1.0):
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return np.linalg.norm(points - np.asarray(center), axis=1) - radius


def sphere_sdf(points, center=(0.0, 0.0, 0.0), radius=1.0):
    return circle_sdf(points, center, radius)


def halfspace_sdf(points, normal, offset=0.0):
    """Affine field n.x - offset with a unit normal: the exact SDF of a
    line/plane."""
    n = np.asarray(normal, dtype=np.float64)
    n = n / np.linalg.norm(n)
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return points @ n - offset


def min_union(*fields):
    """Pointwise minimum of fields: the union pseudo-SDF (exact outside,
    an underestimate in interior overlap regions)."""
    out = fields[0]
    for f in fields[1:]:
        out = np.minimum(out, f)
    return out


def sample_grid(fn, dim, resolution, lo=-1.0, hi=1.0) -> SdfGrid:
    """Evaluate a field at the cell centers of a regular grid over
    [lo, hi]^dim."""
    if np.isscalar(resolution):
        resolution = (resolution,) * dim
    h = (hi - lo) / resolution[0]
    origin = np.full(dim, lo + 0.5 * h)
    grid = SdfGrid(dim, resolution, origin, h,
                   np.zeros(int(np.prod(resolution))))
    grid.values[:] = np.asarray(fn(grid.cell_centers()), dtype=np.float64)
    return grid


def two_circle_union_grid(resolution=45, lo=-1.0, hi=1.0, centers=(-0.6, 0.6),
                          radius=1.0) -> SdfGrid:
    """The standard repair test input: min-union of two circles."""
    def fn(p):
        return min_union(circle_sdf(p, (centers[0], 0.0), radius),
                         circle_sdf(p, (centers[1], 0.0), radius))
    return sample_grid(fn, 2, resolution, lo, hi)
