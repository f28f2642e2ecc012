"""Mollifier kernels, smoothing and the quadratic commutators.

For two vector fields the commutators are

* ``dot``:    ``(f . g)_eps - f_eps . g_eps``      (scalar)
* ``wedge``:  ``(f ^ g)_eps - f_eps ^ g_eps``      (vector)
* ``tensor``: ``(f (x) g)_eps - f_eps (x) g_eps``  (3x3 tensor)

Convolution uses the DFT of the sampled, renormalised kernel, so every
identity between smoothed products holds exactly on the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import fields
from .errors import ParameterError, ResolutionError, ShapeError, WraparoundError
from .fields import Grid

KERNEL_KINDS = ("bump", "gaussian-truncated")
COMMUTATOR_KINDS = ("dot", "wedge", "tensor")

# The truncated Gaussian has standard deviation eps/3 and is cut at radius eps.
_GAUSSIAN_WIDTH = 3.0


@dataclass(frozen=True, eq=False)
class MollifierKernel:
    """Sampled kernel ``psi^eps`` wrapped onto the periodic grid.

    ``samples[i1, i2, i3]`` is the kernel at the minimal-image offset of that
    sample from the origin. ``spectrum`` is ``h^3 * DFT(samples)`` on the
    half-spectrum layout, i.e. the Fourier multiplier of the discrete
    convolution.
    """

    grid: Grid
    eps: float
    kind: str
    samples: np.ndarray
    support_radius: float

    @cached_property
    def spectrum(self) -> np.ndarray:
        # the kernel is even on the grid, so its DFT is real up to rounding
        return (fields.to_spectral(self.samples) * self.grid.cell_volume).real

    @property
    def mass(self) -> float:
        return float(self.samples.sum() * self.grid.cell_volume)

    def shifts(self):
        """Integer offsets ``y/h`` with positive weight, and the weights ``h^3 psi(y)``."""
        idx = np.argwhere(self.samples > 0)
        n = self.grid.n
        offsets = np.where(idx >= n // 2, idx - n, idx)
        weights = self.samples[tuple(idx.T)] * self.grid.cell_volume
        return offsets, weights


def admissible_eps(grid: Grid) -> tuple[float, float]:
    """Smallest and largest mollifier scale accepted on ``grid``."""
    return 3.0 * grid.h, grid.box / 2.0


def _offset_radius(grid: Grid) -> np.ndarray:
    d = np.fft.fftfreq(grid.n, 1.0 / grid.n) * grid.h
    return np.sqrt(d[:, None, None] ** 2 + d[None, :, None] ** 2 + d[None, None, :] ** 2)


def make_mollifier(grid: Grid, eps: float, kind: str = "bump") -> MollifierKernel:
    """Build ``psi^eps`` of the given kind with discrete mass exactly one.

    Both kinds are supported in the closed ball of radius ``eps``:
    ``bump`` is ``exp(-1/(1 - s^2))`` with ``s = |x|/eps`` and
    ``gaussian-truncated`` is ``exp(-4.5 s^2)`` cut at ``s = 1``.
    """
    if kind not in KERNEL_KINDS:
        raise ParameterError(f"unknown mollifier kind {kind!r}; expected one of {KERNEL_KINDS}")
    lo, hi = admissible_eps(grid)
    if not (math.isfinite(eps) and lo * (1 - 1e-12) <= eps <= hi * (1 + 1e-12)):
        raise ResolutionError(
            f"mollifier scale eps={eps!r} outside the admissible interval "
            f"[3h, L/2] = [{lo!r}, {hi!r}] for n={grid.n}, L={grid.box!r}"
        )
    s = _offset_radius(grid) / eps
    inside = s < 1.0
    psi = np.zeros(grid.scalar_shape)
    if kind == "bump":
        psi[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    else:
        psi[inside] = np.exp(-0.5 * (_GAUSSIAN_WIDTH * s[inside]) ** 2)
    psi /= psi.sum() * grid.cell_volume
    return MollifierKernel(grid=grid, eps=float(eps), kind=kind, samples=psi, support_radius=float(eps))


def _check_kernel_grid(f: np.ndarray, kernel: MollifierKernel, name: str) -> np.ndarray:
    if np.shape(f)[-3:] != kernel.grid.scalar_shape:
        raise ShapeError(f"{name} of shape {np.shape(f)} does not live on the kernel grid n={kernel.grid.n}")
    return fields.check_field(kernel.grid, f, name=name)


def smooth_hat(kernel: MollifierKernel, fh: np.ndarray) -> np.ndarray:
    return fh * kernel.spectrum


def smooth(u, kernel: MollifierKernel) -> np.ndarray:
    """``u_eps = psi^eps * u`` computed as a product of spectra."""
    u = _check_kernel_grid(u, kernel, "field")
    return fields.to_physical(kernel.grid, fields.to_spectral(u) * kernel.spectrum)


def _product(kind: str):
    if kind == "dot":
        return fields.dot
    if kind == "wedge":
        return fields.cross
    if kind == "tensor":
        return fields.outer
    raise ParameterError(f"unknown commutator kind {kind!r}; expected one of {COMMUTATOR_KINDS}")


def _check_pair(phi1, phi2, kernel):
    phi1 = _check_kernel_grid(phi1, kernel, "phi1")
    phi2 = _check_kernel_grid(phi2, kernel, "phi2")
    if fields.rank_of(phi1) != 1 or fields.rank_of(phi2) != 1:
        raise ShapeError(f"commutators take two vector fields, got shapes {phi1.shape} and {phi2.shape}")
    return phi1, phi2


def commutator_unchecked(phi1, phi2, kind: str, kernel: MollifierKernel, smoothed=None):
    """Commutator without validation; ``smoothed`` may carry precomputed ``(phi1_eps, phi2_eps)``."""
    prod = _product(kind)
    grid = kernel.grid
    if smoothed is None:
        smoothed = (
            fields.to_physical(grid, fields.to_spectral(phi1) * kernel.spectrum),
            fields.to_physical(grid, fields.to_spectral(phi2) * kernel.spectrum),
        )
    both = prod(phi1, phi2)
    return fields.to_physical(grid, fields.to_spectral(both) * kernel.spectrum) - prod(*smoothed)


def commutator(phi1, phi2, kind: str, kernel: MollifierKernel) -> np.ndarray:
    """``(phi1 * phi2)_eps - phi1_eps * phi2_eps`` for ``*`` the dot, wedge or tensor product."""
    _product(kind)
    phi1, phi2 = _check_pair(phi1, phi2, kernel)
    return commutator_unchecked(phi1, phi2, kind, kernel)


def cet_split(phi1, phi2, kind: str, kernel: MollifierKernel):
    """Split a commutator into the shift-increment average and the fluctuation product.

    Returns ``(r, tail)`` where ``r(x) = sum_y h^3 psi(y) d_y phi1(x) * d_y phi2(x)``
    with ``d_y f(x) = f(x - y) - f(x)``, and ``tail = (phi1 - phi1_eps) * (phi2 - phi2_eps)``,
    so that ``r - tail`` equals :func:`commutator`. ``r`` is evaluated by direct
    quadrature over every grid shift in the kernel support.
    """
    prod = _product(kind)
    phi1, phi2 = _check_pair(phi1, phi2, kernel)
    if kernel.support_radius > kernel.grid.box / 2.0 * (1 + 1e-12):
        raise WraparoundError(
            f"kernel support radius {kernel.support_radius!r} exceeds half the box {kernel.grid.box / 2.0!r}"
        )
    offsets, weights = kernel.shifts()
    r = None
    for offset, w in zip(offsets, weights):
        shift = tuple(int(s) for s in offset)
        d1 = np.roll(phi1, shift, axis=(1, 2, 3)) - phi1
        d2 = np.roll(phi2, shift, axis=(1, 2, 3)) - phi2
        term = w * prod(d1, d2)
        r = term if r is None else r + term
    tail = prod(phi1 - smooth(phi1, kernel), phi2 - smooth(phi2, kernel))
    return r, tail
