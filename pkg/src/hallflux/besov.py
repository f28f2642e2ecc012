"""Besov-type regularity estimates for sampled space-time fields.

The basic quantity is the difference quotient

    f[u](t, y) = || u(t, . - y) - u(t, .) ||_{L^p} / |y|^alpha

normed in ``L^r`` over the stored times *before* the supremum over shifts is
taken. Shifts are lattice vectors, so every difference is an exact
permutation of samples. Shells are cubic lattice shells: shell ``m`` holds the
26 shifts ``m * d`` with ``d`` in ``{-1, 0, 1}^3 \\ {0}``, and its magnitude is
``m * h``. Means are removed by the dyadic blocks only; difference quotients
do not see them anyway.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from . import fields
from .errors import DataError, ParameterError, ShiftError
from .fields import Grid
from .timestepping import Trajectory

EXACT_ZERO = "exact-zero"
DIRECTIONS = tuple(d for d in itertools.product((-1, 0, 1), repeat=3) if any(d))
MIN_SHELLS = 4


@dataclass
class SampledField:
    """Samples ``values[k]`` of one field at ``times[k]`` on ``grid``."""

    grid: Grid
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.atleast_1d(np.asarray(self.times, dtype=float))
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[0] != len(self.times):
            raise DataError(f"{len(self.times)} times but {self.values.shape[0]} samples")
        if self.values.shape[-3:] != self.grid.scalar_shape:
            raise ParameterError(f"samples of shape {self.values.shape[1:]} do not live on {self.grid}")

    @classmethod
    def single(cls, grid: Grid, f) -> SampledField:
        return cls(grid, [0.0], np.asarray(f, dtype=float)[None])

    @classmethod
    def from_trajectory(cls, trajectory: Trajectory, name: str) -> SampledField:
        """Pull the attribute ``name`` (``"u"``, ``"B"``, ``"m"``, ...) out of every state."""
        values = np.stack([getattr(s, name) for s in trajectory])
        return cls(trajectory.grid, trajectory.times, values)


def _as_samples(source, grid: Grid | None = None) -> SampledField:
    if isinstance(source, SampledField):
        return source
    f = np.asarray(source, dtype=float)
    return SampledField.single(grid or Grid(f.shape[-1]), f)


def _check_exponents(alpha, p, r):
    if not 0 < alpha < 2:
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha!r}")
    for name, v in (("p", p), ("r", r)):
        if not v >= 1:
            raise ParameterError(f"{name} must lie in [1, inf], got {v!r}")


def lattice_shift(grid: Grid, y) -> tuple[int, int, int]:
    """Integer offsets of the physical shift ``y``; raises :class:`ShiftError` off the lattice or out of range."""
    y = np.asarray(y, dtype=float)
    if y.shape != (3,) or not np.all(np.isfinite(y)):
        raise ShiftError(f"a shift is a finite 3-vector, got {y!r}")
    steps = y / grid.h
    offsets = np.rint(steps)
    if np.max(np.abs(steps - offsets)) > 1e-9:
        raise ShiftError(f"shift {y.tolist()} is not a multiple of the grid spacing h={grid.h!r}")
    size = np.max(np.abs(offsets))
    if not 1 <= size <= grid.n // 8:
        raise ShiftError(f"shift {y.tolist()} has lattice size {size:g}h outside [h, L/8] = [1, {grid.n // 8}]h")
    return tuple(int(o) for o in offsets)


def _time_norm(values, times, r) -> float:
    values = np.asarray(values, dtype=float)
    if len(times) == 1:
        return float(values[0])
    if math.isinf(r):
        return float(values.max())
    return float(trapezoid(values**r, times) ** (1.0 / r))


def _difference_norms(samples: SampledField, offsets, p) -> np.ndarray:
    g = samples.grid
    return np.array(
        [fields.lp_norm(g, np.roll(u, offsets, axis=(-3, -2, -1)) - u, p) for u in samples.values]
    )


def _quotient(samples: SampledField, offsets, alpha, p, r) -> float:
    length = math.sqrt(sum(o * o for o in offsets)) * samples.grid.h
    return _time_norm(_difference_norms(samples, offsets, p), samples.times, r) / length**alpha


def difference_seminorm(source, y, alpha: float, p: float, r: float, grid: Grid | None = None) -> float:
    """``|| ||u(., . - y) - u||_{L^p} / |y|^alpha ||_{L^r(0,T)}`` for a lattice shift ``y``.

    ``source`` is a :class:`SampledField` or a single field; the time norm
    uses the trapezoid rule and is skipped for a single sample.
    """
    _check_exponents(alpha, p, r)
    samples = _as_samples(source, grid)
    return _quotient(samples, lattice_shift(samples.grid, y), alpha, p, r)


def fit_profile(shells, norms) -> tuple[float, float]:
    """Least-squares slope and ``R^2`` of ``log norm`` against ``log shell``."""
    lx, ly = np.log(np.asarray(shells, dtype=float)), np.log(np.asarray(norms, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    spread = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / spread if spread > 0 else 1.0
    return float(slope), float(r2)


@dataclass
class BesovProfile:
    """Shell profile of the tilde-norm.

    ``norms[i]`` is the sup over the 26 shifts of shell ``shells[i]`` of the
    time-normed difference quotient. ``seminorm`` is the max over the sampled
    shells, a lower bound of the true supremum. ``c0_heuristic`` is a
    heuristic only: the profile decays (slope > 0.05) over the three smallest
    shells.
    """

    alpha: float
    p: float
    r: float
    shells: np.ndarray
    norms: np.ndarray
    slope: float | str
    r_squared: float
    c0_heuristic: bool
    seminorm: float = field(init=False)

    def __post_init__(self):
        self.seminorm = float(np.max(self.norms))

    def to_json(self) -> dict:
        def num(v):
            return v if isinstance(v, str) or math.isfinite(v) else str(v)

        return {
            "alpha": self.alpha,
            "p": num(float(self.p)),
            "r": num(float(self.r)),
            "shells": self.shells.tolist(),
            "norms": self.norms.tolist(),
            "slope": num(self.slope),
            "r_squared": num(self.r_squared),
            "c0_heuristic": self.c0_heuristic,
            "seminorm": self.seminorm,
        }

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["shell", "norm"])
        writer.writerows((repr(float(s)), repr(float(v))) for s, v in zip(self.shells, self.norms))
        return out.getvalue()


def default_shells(grid: Grid) -> list[int]:
    """Lattice multipliers ``2, 4, 8, ...`` up to ``L/8``."""
    out, m = [], 2
    while m <= grid.n // 8:
        out.append(m)
        m *= 2
    return out


def tilde_norm(source, alpha: float, p: float, r: float, shells=None, grid: Grid | None = None) -> BesovProfile:
    """Profile of the tilde-L^r B^alpha_{p,inf} seminorm over lattice shells.

    ``shells`` are integer multipliers of ``h`` (default :func:`default_shells`);
    at least four are needed.
    """
    _check_exponents(alpha, p, r)
    samples = _as_samples(source, grid)
    g = samples.grid
    shells = sorted(int(m) for m in (default_shells(g) if shells is None else shells))
    if len(set(shells)) < MIN_SHELLS:
        raise DataError(
            f"a Besov profile needs at least {MIN_SHELLS} distinct shells, got {shells} on n={g.n} "
            "(pass smaller multipliers or use a finer grid)"
        )
    if shells[0] < 1 or shells[-1] > g.n // 8:
        raise ShiftError(f"shell multipliers {shells} leave [1, {g.n // 8}] (h to L/8)")
    norms = np.array(
        [max(_quotient(samples, tuple(m * c for c in d), alpha, p, r) for d in DIRECTIONS) for m in shells]
    )
    magnitudes = np.array(shells, dtype=float) * g.h
    if np.all(norms == 0):
        return BesovProfile(alpha, p, r, magnitudes, norms, EXACT_ZERO, float("nan"), True)
    if np.any(norms == 0):
        raise DataError("profile vanishes on some shells but not all; no log-log fit possible")
    slope, r2 = fit_profile(magnitudes, norms)
    head, _ = fit_profile(magnitudes[:3], norms[:3])
    return BesovProfile(alpha, p, r, magnitudes, norms, slope, r2, head > 0.05)


# ---------------------------------------------------------------------------
# exponents


EXPONENT_LAWS = ("mll-energy", "mll-interpolated", "onsager-energy", "mhd-energy", "mhd-crossed-helicity")
INSIDE = "within theorem hypothesis"
OUTSIDE = "outside theorem hypothesis"
CRITICAL = "critical case: energy equality under the c0 condition"


@dataclass
class ExponentMap:
    """Conjugate exponent of ``value`` for ``law`` and whether the pair is admissible.

    For the MHD laws ``exponent`` is the smallest magnetic regularity that
    works with velocity regularity ``value``; ``other`` is the magnetic
    regularity being checked, if given.
    """

    law: str
    value: float
    exponent: float
    admissible: bool
    verdict: str
    other: float | None = None


def exponent_map(value: float, law: str, other: float | None = None) -> ExponentMap:
    """Evaluate the critical exponent relations.

    ``mll-energy``: ``alpha -> p = 9 / (3 alpha - 1)``, hypothesis ``alpha in (3/2, 2)``.
    ``mll-interpolated``: ``beta -> q = 12 / (4 beta - 1)``, hypothesis ``beta in (9/8, 3/2)``.
    ``onsager-energy``: ``alpha -> p = 3``; ``alpha = 1/3`` is the critical case.
    ``mhd-energy``: velocity ``alpha -> beta >= (1 - alpha) / 2``, both in ``[0, 1)``.
    ``mhd-crossed-helicity``: ``alpha -> beta >= max(1 - 2 alpha, 1/3)``, both in ``(0, 1)``.
    """
    if law not in EXPONENT_LAWS:
        raise ParameterError(f"unknown exponent law {law!r}; expected one of {EXPONENT_LAWS}")
    v = float(value)
    if law == "mll-energy":
        p = 9.0 / (3.0 * v - 1.0) if 3.0 * v > 1.0 else math.inf
        ok = 1.5 < v < 2.0
        return ExponentMap(law, v, p, ok, INSIDE if ok else OUTSIDE)
    if law == "mll-interpolated":
        q = 12.0 / (4.0 * v - 1.0) if 4.0 * v > 1.0 else math.inf
        ok = 9.0 / 8.0 < v < 1.5
        return ExponentMap(law, v, q, ok, INSIDE if ok else OUTSIDE)
    if law == "onsager-energy":
        if math.isclose(v, 1.0 / 3.0, rel_tol=0, abs_tol=1e-12):
            return ExponentMap(law, v, 3.0, True, CRITICAL)
        ok = 1.0 / 3.0 < v < 1.0
        return ExponentMap(law, v, 3.0, ok, INSIDE if ok else OUTSIDE)
    if law == "mhd-energy":
        need = (1.0 - v) / 2.0
        ok = 0.0 <= v < 1.0
        if other is not None:
            ok = ok and 0.0 < other < 1.0 and v + 2.0 * other >= 1.0 - 1e-12
        return ExponentMap(law, v, need, ok, INSIDE if ok else OUTSIDE, other)
    need = max(1.0 - 2.0 * v, 1.0 / 3.0)
    ok = 0.0 < v < 1.0
    if other is not None:
        ok = ok and 0.0 < other < 1.0 and 2.0 * v + other >= 1.0 - 1e-12 and 3.0 * other >= 1.0 - 1e-12
    return ExponentMap(law, v, need, ok, INSIDE if ok else OUTSIDE, other)


def scaling_partner(alpha: float, p: float, alpha_tilde: float) -> float:
    """``p~`` with ``alpha~ - 3/p~ = alpha - 3/p``; ``inf`` when the right side is zero."""
    inverse = (alpha_tilde - alpha) / 3.0 + 1.0 / p
    if inverse < -1e-15 or inverse > 1.0:
        raise ParameterError(
            f"no exponent p~ in [1, inf] with alpha~ - 3/p~ = alpha - 3/p for alpha={alpha}, p={p}, alpha~={alpha_tilde}"
        )
    return math.inf if inverse <= 1e-15 else 1.0 / inverse


# ---------------------------------------------------------------------------
# dyadic blocks


def _low_pass(r):
    """Smooth radial cutoff: 1 for ``r <= 3/4``, 0 for ``r >= 4/3``."""
    s = np.clip((np.asarray(r, dtype=float) - 0.75) / (4.0 / 3.0 - 0.75), 0.0, 1.0)

    def g(x):
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = np.exp(-1.0 / x[pos])
        return out

    a, b = g(1.0 - s), g(s)
    return a / (a + b)


def partition_function(r):
    """``phi(r) = chi(r/2) - chi(r)``, supported in the annulus ``3/4 < r < 8/3``."""
    return _low_pass(np.asarray(r, dtype=float) / 2.0) - _low_pass(r)


@dataclass
class DyadicDecomposition:
    """Blocks ``Delta_j f = phi(2^-j |k|) f^`` for ``j_min <= j <= j_max``; ``mean`` is the removed k = 0 part."""

    grid: Grid
    blocks: list
    mean: np.ndarray

    def reconstruct(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros_like(self.mean)
        return np.sum([b for _, b in self.blocks], axis=0)

    def energies(self) -> dict:
        return {j: fields.lp_norm(self.grid, b, 2) ** 2 for j, b in self.blocks}

    @property
    def levels(self) -> list[int]:
        return [j for j, _ in self.blocks]


def dyadic_range(grid: Grid) -> tuple[int, int]:
    """Smallest range of levels whose partition sums to one on every nonzero wavevector of ``grid``."""
    kmax = math.sqrt(3.0) * (grid.n // 2) * 2.0 * math.pi / grid.box
    kmin = 2.0 * math.pi / grid.box
    j_min = math.floor(math.log2(kmin / (4.0 / 3.0)))
    j_max = math.ceil(math.log2(kmax / 0.75)) - 1
    return j_min, j_max


def dyadic_blocks(f, grid: Grid | None = None) -> DyadicDecomposition:
    """Split the mean-zero part of ``f`` into smooth dyadic shells of ``|k|``."""
    f = np.asarray(f, dtype=float)
    grid = grid or Grid(f.shape[-1])
    fh = fields.to_spectral(f)
    mean = fields.to_physical(grid, np.where(grid.integer_radius == 0, fh, 0))
    radius = grid.integer_radius * (2.0 * math.pi / grid.box)
    j_min, j_max = dyadic_range(grid)
    blocks = [(j, fields.to_physical(grid, fh * partition_function(radius / 2.0**j))) for j in range(j_min, j_max + 1)]
    return DyadicDecomposition(grid, blocks, mean)


# ---------------------------------------------------------------------------
# embedding


@dataclass
class EmbeddingRecord:
    """Both seminorm profiles of an embedding check and their ratio.

    ``ratio`` is ``nan`` (and ``degenerate`` true) when the field is zero.
    """

    alpha: float
    p: float
    alpha_tilde: float
    p_tilde: float
    profile: BesovProfile
    profile_tilde: BesovProfile
    ratio: float
    degenerate: bool


def _check_embedding(alpha, alpha_tilde):
    for name, v in (("alpha", alpha), ("alpha~", alpha_tilde)):
        if not (0 < v < 1 or 1 < v < 2):
            raise ParameterError(f"{name} must lie in (0, 1) or (1, 2), got {v!r}")
    if not alpha_tilde < alpha:
        raise ParameterError(f"the embedding lowers regularity: need alpha~ < alpha, got {alpha_tilde} >= {alpha}")


def embedding_check(
    source, alpha: float, p: float, alpha_tilde: float, r: float = 3.0, shells=None, grid: Grid | None = None
) -> EmbeddingRecord:
    """Compare the alpha,p and alpha~,p~ seminorms for ``alpha~ - 3/p~ = alpha - 3/p``."""
    _check_embedding(alpha, alpha_tilde)
    p_tilde = scaling_partner(alpha, p, alpha_tilde)
    samples = _as_samples(source, grid)
    prof = tilde_norm(samples, alpha, p, r, shells)
    prof_tilde = tilde_norm(samples, alpha_tilde, p_tilde, r, shells)
    if prof.seminorm == 0:
        return EmbeddingRecord(alpha, p, alpha_tilde, p_tilde, prof, prof_tilde, float("nan"), True)
    return EmbeddingRecord(alpha, p, alpha_tilde, p_tilde, prof, prof_tilde, prof_tilde.seminorm / prof.seminorm, False)


def bernstein_ratios(f, alpha: float, p: float, alpha_tilde: float, grid: Grid | None = None) -> dict:
    """``||Delta_j f||_{p~} / (2^{j (alpha - alpha~)} ||Delta_j f||_p)`` per nonempty block.

    The factor equals ``2^{3 j (1/p - 1/p~)}``, the Bernstein growth rate.
    """
    _check_embedding(alpha, alpha_tilde)
    p_tilde = scaling_partner(alpha, p, alpha_tilde)
    dec = dyadic_blocks(f, grid)
    g = dec.grid
    out = {}
    for j, b in dec.blocks:
        low = fields.lp_norm(g, b, p)
        if low > 1e-12 * max(1.0, float(np.max(np.abs(f)))):
            out[j] = fields.lp_norm(g, b, p_tilde) / (2.0 ** (j * (alpha - alpha_tilde)) * low)
    return out
