"""Seeded test fields shared across the suite."""

import math

import numpy as np

from hallflux import fields


def band_limited_vector(grid, seed, kmax=3, amplitude=1.0, solenoidal=False, mean_zero=True):
    """Seeded random real vector field with modes |k| <= kmax only."""
    rng = np.random.default_rng(seed)
    shape = (3,) + grid.scalar_shape
    spec = fields.to_spectral(rng.standard_normal(shape))
    spec = spec * (grid.integer_radius <= kmax)
    if mean_zero:
        spec[:, 0, 0, 0] = 0.0
    v = fields.to_physical(grid, spec)
    if solenoidal:
        v = fields.leray_project(grid, v)
    return amplitude * v / np.max(np.abs(v))


def band_limited_scalar(grid, seed, kmax=3):
    rng = np.random.default_rng(seed)
    spec = fields.to_spectral(rng.standard_normal(grid.scalar_shape))
    spec = spec * (grid.integer_radius <= kmax)
    return fields.to_physical(grid, spec)


def abc_field(grid, a=1.0, b=1.0, c=1.0):
    x1, x2, x3 = grid.axes()
    zero = np.zeros(grid.scalar_shape)
    return np.stack(
        (
            a * np.sin(x3) + c * np.cos(x2) + zero,
            b * np.sin(x1) + a * np.cos(x3) + zero,
            c * np.sin(x2) + b * np.cos(x1) + zero,
        )
    )


TWO_PI = 2 * math.pi
