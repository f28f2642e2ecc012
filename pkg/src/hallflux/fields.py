"""Spectral calculus on the periodic box [0, L)^3.

Fields are plain float64 numpy arrays in C order:

* scalar: shape ``(n, n, n)``
* vector: shape ``(3, n, n, n)``
* tensor: shape ``(3, 3, n, n, n)``, ``T[i, j] = a_i b_j`` for an outer product

Sample ``[..., i1, i2, i3]`` sits at ``x = (i1, i2, i3) * h``, so x1 varies
slowest and x3 fastest.

DFT convention: the forward transform is unscaled and the inverse divides by
n^3, so the k = 0 coefficient equals ``mean * n**3``. Derivatives use the
wavevector ``2*pi/L * k`` with the Nyquist component set to zero, which keeps
every differential operator real and makes ``div(curl)`` and ``curl(grad)``
vanish exactly mode by mode. The Laplacian is ``div(grad)`` with the same
wavevector.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .errors import GaugeError, InvalidFieldError, ParameterError, ShapeError

THREADS_ENV = "HALLFLUX_THREADS"
SNAPSHOT_MAGIC = b"OLF1"
_AXES = (-3, -2, -1)


def fft_workers() -> int:
    """Thread count for FFTs, read from ``HALLFLUX_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        workers = int(raw)
    except ValueError:
        raise ParameterError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if workers < 1:
        raise ParameterError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return workers


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n`` points per axis on a box of period ``box``."""

    n: int
    box: float = 2.0 * math.pi

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise ParameterError(f"grid size must be an integer, got {self.n!r}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ParameterError(f"grid size must be a power of two >= 8, got {self.n}")
        if not (math.isfinite(self.box) and self.box > 0):
            raise ParameterError(f"box period must be positive and finite, got {self.box!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "box", float(self.box))

    @property
    def h(self) -> float:
        return self.box / self.n

    @property
    def cell_volume(self) -> float:
        return self.h**3

    @property
    def scalar_shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def vector_shape(self) -> tuple[int, int, int, int]:
        return (3, self.n, self.n, self.n)

    def axes(self):
        """Coordinates along each axis, shaped to broadcast over a scalar field."""
        x = np.arange(self.n) * self.h
        return x[:, None, None], x[None, :, None], x[None, None, :]

    def mesh(self) -> np.ndarray:
        """Coordinates of every sample as a vector field."""
        x1, x2, x3 = self.axes()
        return np.stack(np.broadcast_arrays(x1, x2, x3)).astype(float)

    def zeros(self, rank: int = 1) -> np.ndarray:
        return np.zeros((3,) * rank + self.scalar_shape)

    @cached_property
    def integer_modes(self):
        """Integer wavenumbers on the half-spectrum layout of ``rfftn``."""
        full = np.fft.fftfreq(self.n, 1.0 / self.n)
        half = np.arange(self.n // 2 + 1, dtype=float)
        return full[:, None, None], full[None, :, None], half[None, None, :]

    @cached_property
    def wavevector(self):
        """Derivative wavevector (physical units, Nyquist zeroed) on the half-spectrum layout."""
        scale = 2.0 * math.pi / self.box
        out = []
        for k in self.integer_modes:
            k = k * scale
            k[np.abs(k) == scale * self.n / 2] = 0.0
            out.append(k)
        return tuple(out)

    @cached_property
    def k_squared(self) -> np.ndarray:
        k1, k2, k3 = self.wavevector
        return k1**2 + k2**2 + k3**2

    @cached_property
    def inverse_k_squared(self) -> np.ndarray:
        ksq = self.k_squared
        out = np.zeros_like(ksq)
        np.divide(1.0, ksq, out=out, where=ksq > 0)
        return out

    @cached_property
    def integer_radius(self) -> np.ndarray:
        k1, k2, k3 = self.integer_modes
        return np.sqrt(k1**2 + k2**2 + k3**2)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Spherical two-thirds rule: keep modes with integer radius at most n/3."""
        return self.integer_radius <= self.n / 3.0


# ---------------------------------------------------------------------------
# validation and pointwise algebra


def check_field(grid: Grid, f, rank: int | None = None, name: str = "field") -> np.ndarray:
    """Return ``f`` as a float array after checking its shape and finiteness."""
    f = np.asarray(f, dtype=float)
    if f.shape[-3:] != grid.scalar_shape or f.ndim not in (3, 4, 5):
        raise ShapeError(f"{name} has shape {f.shape}, incompatible with grid n={grid.n}")
    if f.ndim > 3 and any(d != 3 for d in f.shape[:-3]):
        raise ShapeError(f"{name} has shape {f.shape}; leading axes must have length 3")
    if rank is not None and f.ndim - 3 != rank:
        kinds = {0: "scalar", 1: "vector", 2: "tensor"}
        raise ShapeError(f"{name} must be a {kinds[rank]} field, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise InvalidFieldError(f"{name} contains non-finite samples")
    return f


def rank_of(f: np.ndarray) -> int:
    return f.ndim - 3


def dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack(
        (
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        )
    )


def outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[:, None] * b[None, :]


def magnitude(a: np.ndarray) -> np.ndarray:
    return np.sqrt(dot(a, a))


# ---------------------------------------------------------------------------
# transforms


def to_spectral(f: np.ndarray) -> np.ndarray:
    """Half-spectrum forward DFT over the three spatial axes (unscaled)."""
    return sfft.rfftn(f, axes=_AXES, workers=fft_workers())


def to_physical(grid: Grid, fh: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_spectral` (divides by n^3)."""
    return sfft.irfftn(fh, s=grid.scalar_shape, axes=_AXES, workers=fft_workers())


@dataclass(frozen=True)
class SpectralField:
    """Full complex DFT of a real field, in numpy FFT ordering.

    ``coefficients[..., a, b, c]`` holds the mode with integer wavevector
    ``(fftfreq[a], fftfreq[b], fftfreq[c]) * n``, each in ``[-n/2, n/2)``.
    """

    grid: Grid
    coefficients: np.ndarray

    def mode(self, k) -> np.ndarray | complex:
        n = self.grid.n
        idx = tuple(int(c) % n for c in k)
        return self.coefficients[(...,) + idx]

    def wavevectors(self) -> np.ndarray:
        n = self.grid.n
        k = np.fft.fftfreq(n, 1.0 / n)
        return np.stack(np.meshgrid(k, k, k, indexing="ij"))

    def energy(self) -> float:
        """Coefficient energy normalised so that it equals the squared L2 norm."""
        n3 = self.grid.n**3
        return float(np.sum(np.abs(self.coefficients) ** 2) * self.grid.cell_volume / n3)


def transform(grid: Grid, f, direction: str = "forward"):
    """Forward DFT of a field to a :class:`SpectralField`, or back again."""
    if direction == "forward":
        f = check_field(grid, f)
        return SpectralField(grid, np.fft.fftn(f, axes=_AXES))
    if direction == "inverse":
        coeffs = f.coefficients if isinstance(f, SpectralField) else np.asarray(f)
        if not np.all(np.isfinite(coeffs)):
            raise InvalidFieldError("spectrum contains non-finite coefficients")
        if coeffs.shape[-3:] != grid.scalar_shape:
            raise ShapeError(f"spectrum shape {coeffs.shape} does not match grid n={grid.n}")
        return np.fft.ifftn(coeffs, axes=_AXES).real
    raise ParameterError(f"direction must be 'forward' or 'inverse', got {direction!r}")


# ---------------------------------------------------------------------------
# spectral-space operators (no validation; used by the solvers)


def grad_hat(grid: Grid, fh: np.ndarray) -> np.ndarray:
    k1, k2, k3 = grid.wavevector
    return np.stack((1j * k1 * fh, 1j * k2 * fh, 1j * k3 * fh))


def div_hat(grid: Grid, vh: np.ndarray) -> np.ndarray:
    k1, k2, k3 = grid.wavevector
    return 1j * (k1 * vh[0] + k2 * vh[1] + k3 * vh[2])


def curl_hat(grid: Grid, vh: np.ndarray) -> np.ndarray:
    k1, k2, k3 = grid.wavevector
    return 1j * np.stack(
        (
            k2 * vh[2] - k3 * vh[1],
            k3 * vh[0] - k1 * vh[2],
            k1 * vh[1] - k2 * vh[0],
        )
    )


def tensor_div_hat(grid: Grid, th: np.ndarray) -> np.ndarray:
    """Row divergence ``(div T)_i = sum_j d_j T_ij``."""
    k1, k2, k3 = grid.wavevector
    return 1j * (k1 * th[:, 0] + k2 * th[:, 1] + k3 * th[:, 2])


def laplacian_hat(grid: Grid, fh: np.ndarray) -> np.ndarray:
    return -grid.k_squared * fh


def leray_hat(grid: Grid, vh: np.ndarray) -> np.ndarray:
    k1, k2, k3 = grid.wavevector
    kv = (k1 * vh[0] + k2 * vh[1] + k3 * vh[2]) * grid.inverse_k_squared
    return np.stack((vh[0] - k1 * kv, vh[1] - k2 * kv, vh[2] - k3 * kv))


def biot_savart_hat(grid: Grid, bh: np.ndarray) -> np.ndarray:
    return curl_hat(grid, bh) * grid.inverse_k_squared


def inverse_laplacian_hat(grid: Grid, fh: np.ndarray) -> np.ndarray:
    """Solve ``lap(g) = f`` with the zero mode of ``g`` set to zero."""
    return -fh * grid.inverse_k_squared


# ---------------------------------------------------------------------------
# physical-space differential operators


def grad(grid: Grid, f) -> np.ndarray:
    f = check_field(grid, f, 0)
    return to_physical(grid, grad_hat(grid, to_spectral(f)))


def div(grid: Grid, v) -> np.ndarray:
    """Divergence of a vector field, or row divergence of a tensor field."""
    v = check_field(grid, v)
    if rank_of(v) == 1:
        return to_physical(grid, div_hat(grid, to_spectral(v)))
    if rank_of(v) == 2:
        return to_physical(grid, tensor_div_hat(grid, to_spectral(v)))
    raise ShapeError("div expects a vector or tensor field")


def curl(grid: Grid, v) -> np.ndarray:
    v = check_field(grid, v, 1)
    return to_physical(grid, curl_hat(grid, to_spectral(v)))


def laplacian(grid: Grid, f) -> np.ndarray:
    f = check_field(grid, f)
    if rank_of(f) > 1:
        raise ShapeError("laplacian expects a scalar or vector field")
    return to_physical(grid, laplacian_hat(grid, to_spectral(f)))


def differential(grid: Grid, f, op: str) -> np.ndarray:
    """Apply ``grad``, ``div``, ``curl`` or ``laplacian`` as an exact Fourier multiplier."""
    ops = {"grad": grad, "div": div, "curl": curl, "laplacian": laplacian}
    try:
        return ops[op](grid, f)
    except KeyError:
        raise ParameterError(f"unknown differential operator {op!r}") from None


def leray_project(grid: Grid, v) -> np.ndarray:
    """Divergence-free part of ``v``; the mean is kept."""
    v = check_field(grid, v, 1)
    return to_physical(grid, leray_hat(grid, to_spectral(v)))


def biot_savart(grid: Grid, b, atol: float = 1e-10) -> np.ndarray:
    """Mean-zero, divergence-free potential ``A = curl (-lap)^-1 B`` with ``curl A = B``.

    ``B`` must have zero mean in every component; otherwise no periodic
    potential exists and :class:`GaugeError` is raised.
    """
    b = check_field(grid, b, 1, "B")
    scale = max(1.0, float(np.max(np.abs(b))))
    means = b.mean(axis=(1, 2, 3))
    bad = [i for i in range(3) if abs(means[i]) > atol * scale]
    if bad:
        comps = ", ".join(f"B{i + 1} (mean {means[i]:.3e})" for i in bad)
        raise GaugeError(f"Biot-Savart needs mean-zero B; offending component(s): {comps}")
    return to_physical(grid, biot_savart_hat(grid, to_spectral(b)))


# ---------------------------------------------------------------------------
# reductions


def integral(grid: Grid, f) -> float | np.ndarray:
    """``h^3 * sum`` of the samples (per component for vector fields)."""
    f = np.asarray(f, dtype=float)
    return np.sum(f, axis=_AXES) * grid.cell_volume


def mean(f) -> float | np.ndarray:
    return np.mean(f, axis=_AXES)


def lp_norm(grid: Grid, f, p: float = 2.0) -> float:
    """Discrete L^p norm of the pointwise Euclidean magnitude; ``p=inf`` gives the max."""
    if not p >= 1:
        raise ParameterError(f"L^p norm needs p >= 1, got {p!r}")
    f = np.asarray(f, dtype=float)
    mag = np.abs(f) if f.ndim == 3 else np.sqrt(np.sum(f.reshape(-1, *f.shape[-3:]) ** 2, axis=0))
    if math.isinf(p):
        return float(mag.max())
    if p == 2:
        return float(math.sqrt(np.sum(mag * mag) * grid.cell_volume))
    if p == 1:
        return float(np.sum(mag) * grid.cell_volume)
    return float((np.sum(mag**p) * grid.cell_volume) ** (1.0 / p))


def inner_product(grid: Grid, f, g) -> float:
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise ShapeError(f"inner product of mismatched shapes {f.shape} and {g.shape}")
    return float(np.sum(f * g) * grid.cell_volume)


def reduce(grid: Grid, f, kind: str = "integral", p: float = 2.0, other=None) -> float:
    """Scalar reduction: ``integral``, ``lp_norm`` (with ``p``) or ``inner_product`` (with ``other``)."""
    f = check_field(grid, f)
    if kind == "integral":
        if rank_of(f) != 0:
            raise ShapeError("integral reduction expects a scalar field")
        return float(integral(grid, f))
    if kind == "lp_norm":
        return lp_norm(grid, f, p)
    if kind == "inner_product":
        if other is None:
            raise ParameterError("inner_product needs a second field")
        return inner_product(grid, f, check_field(grid, other))
    raise ParameterError(f"unknown reduction {kind!r}")


# ---------------------------------------------------------------------------
# OLF1 snapshots


def write_snapshot(path, field) -> None:
    """Write a field as an OLF1 snapshot.

    Layout: ``b"OLF1"``, u32 LE ``n``, u8 component count ``c``, u8 zero,
    then ``c * n**3`` float64 LE values, component-major and C order inside a
    component (x3 fastest). Several vector fields may be stacked along the
    first axis before writing.
    """
    data = np.asarray(field, dtype=float)
    if data.ndim == 3:
        data = data[None]
    if data.ndim != 4 or not (data.shape[1] == data.shape[2] == data.shape[3]):
        raise ShapeError(f"cannot store array of shape {np.shape(field)} as a snapshot")
    c, n = data.shape[0], data.shape[1]
    if c > 255:
        raise ShapeError(f"snapshot component count {c} exceeds 255")
    header = SNAPSHOT_MAGIC + struct.pack("<IBB", n, c, 0)
    Path(path).write_bytes(header + np.ascontiguousarray(data, dtype="<f8").tobytes())


def read_snapshot(path) -> np.ndarray:
    """Read an OLF1 snapshot; shape ``(c, n, n, n)``, or ``(n, n, n)`` when ``c == 1``."""
    raw = Path(path).read_bytes()
    if raw[:4] != SNAPSHOT_MAGIC:
        raise InvalidFieldError(f"{path}: not an OLF1 snapshot")
    n, c, reserved = struct.unpack("<IBB", raw[4:10])
    if reserved != 0:
        raise InvalidFieldError(f"{path}: reserved header byte is {reserved}, expected 0")
    expected = 10 + 8 * c * n**3
    if len(raw) != expected:
        raise InvalidFieldError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=10).astype(float).reshape(c, n, n, n)
    return data[0] if c == 1 else data


# ---------------------------------------------------------------------------
# seeded random fields


def band_limited_noise(grid: Grid, seed: int, kmax: float, rank: int = 1, spectral_slope: float = 0.0) -> np.ndarray:
    """Real random field with modes ``1 <= |k| <= kmax`` and amplitudes ``|k|^-spectral_slope``.

    Fully determined by ``seed``; the mean is zero and the result is not normalised.
    """
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((3,) * rank + grid.scalar_shape)
    radius = grid.integer_radius
    weight = np.zeros_like(radius)
    keep = (radius >= 1) & (radius <= kmax)
    weight[keep] = radius[keep] ** (-spectral_slope)
    return to_physical(grid, to_spectral(noise) * weight)
