"""Incompressible MHD and Hall-MHD with unit viscosity and resistivity.

Conservative form, with ``J = curl B`` and ``P`` the Leray projector:

    du/dt = -P div(u (x) u - B (x) B) + lap u
    dB/dt = curl(u ^ B) - curl(J ^ B) + lap B        (Hall term only for ``hmhd``)

The regularized scheme replaces the transporting velocity by ``u_eps`` and
the magnetic factor in the Lorentz, induction and Hall terms by ``B_eps``:

    du/dt = -P div(u (x) u_eps) + P(J ^ B_eps) + lap u
    dB/dt = curl(u ^ B_eps) - curl(J ^ B_eps) + lap B
"""

from __future__ import annotations

import dataclasses
import functools
from dataclasses import dataclass

import numpy as np

from . import fields
from .balance import BalanceReport, GapSeries, build_report
from .errors import BlowUpError, ComparisonError, DataError, ParameterError, StabilityError, UsageError
from .fields import Grid, cross, dot, outer
from .mollify import MollifierKernel, make_mollifier
from .timestepping import Trajectory, cumulative_integral, lawson_rk4, step_count

VARIANTS = ("mhd", "hmhd")
HELICITY_KINDS = ("magneto", "fluid", "crossed", "total")
PRESETS = ("zero", "beltrami", "orszag-tang", "random", "taylor-green")


@dataclass(frozen=True, eq=False)
class MhdState:
    """Velocity ``u`` and induction ``B`` at time ``t``.

    ``eps`` switches on the regularized scheme with a mollifier of that
    radius and shape ``kernel_kind``; ``None`` means the plain equations.
    """

    grid: Grid
    t: float
    u: np.ndarray
    B: np.ndarray
    variant: str = "hmhd"
    eps: float | None = None
    kernel_kind: str = "bump"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ParameterError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        fields.check_field(self.grid, self.u, 1, "u")
        fields.check_field(self.grid, self.B, 1, "B")
        if self.eps is not None:
            self.kernel  # validates eps against the grid

    @property
    def regularized(self) -> bool:
        return self.eps is not None

    @property
    def kernel(self) -> MollifierKernel | None:
        return None if self.eps is None else _kernel(self.grid, self.eps, self.kernel_kind)

    @functools.cached_property
    def pressures(self) -> tuple[np.ndarray, np.ndarray]:
        return pressure_solve(self.grid, self.u, self.B)

    @property
    def p(self) -> np.ndarray:
        return self.pressures[1]

    def replace(self, **changes) -> MhdState:
        return dataclasses.replace(self, **changes)

    def constraints(self) -> dict:
        g = self.grid
        return {
            "div_u": float(np.max(np.abs(fields.div(g, self.u)))),
            "div_B": float(np.max(np.abs(fields.div(g, self.B)))),
            "mean_u": self.u.mean(axis=(1, 2, 3)),
            "mean_B": self.B.mean(axis=(1, 2, 3)),
        }


@functools.lru_cache(maxsize=16)
def _kernel(grid: Grid, eps: float, kind: str) -> MollifierKernel:
    return make_mollifier(grid, eps, kind)


def _stress_hat(u, B, transport=None):
    """Half spectrum of ``u (x) transport - B (x) B`` (``transport`` defaults to ``u``)."""
    if transport is None:
        return fields.to_spectral(outer(u, u) - outer(B, B))
    return fields.to_spectral(outer(u, transport) - outer(B, B))


def pressure_solve(grid: Grid, u, B) -> tuple[np.ndarray, np.ndarray]:
    """``(p_m, p)`` with ``lap p_m = -div div(u (x) u - B (x) B)`` and ``p = p_m - |B|^2 / 2``.

    Both are returned with zero mean.
    """
    u = fields.check_field(grid, u, 1, "u")
    B = fields.check_field(grid, B, 1, "B")
    source = -fields.div_hat(grid, fields.tensor_div_hat(grid, _stress_hat(u, B)))
    p_m = fields.to_physical(grid, fields.inverse_laplacian_hat(grid, source))
    p = p_m - 0.5 * dot(B, B)
    return p_m, p - p.mean()


def _hall_on(state: MhdState) -> float:
    return 1.0 if state.variant == "hmhd" else 0.0


def rhs(state: MhdState):
    """``(du/dt, dB/dt)`` of the unregularized system, without dealiasing."""
    g = state.grid
    u, B = state.u, state.B
    uh, Bh = fields.to_spectral(u), fields.to_spectral(B)
    J = fields.to_physical(g, fields.curl_hat(g, Bh))
    du = -fields.leray_hat(g, fields.tensor_div_hat(g, _stress_hat(u, B))) - g.k_squared * uh
    emf = cross(u, B) - _hall_on(state) * cross(J, B)
    dB = fields.curl_hat(g, fields.to_spectral(emf)) - g.k_squared * Bh
    return fields.to_physical(g, du), fields.to_physical(g, dB)


def rhs_regularized(state: MhdState, kernel: MollifierKernel | None = None):
    """``(du/dt, dB/dt)`` of the regularized scheme, without dealiasing.

    ``kernel`` defaults to the state's own mollifier.
    """
    kernel = kernel if kernel is not None else state.kernel
    if kernel is None:
        raise ParameterError("rhs_regularized needs a kernel or a state with eps set")
    g = state.grid
    if kernel.grid != g:
        raise ParameterError("kernel and state live on different grids")
    uh, Bh = fields.to_spectral(state.u), fields.to_spectral(state.B)
    du, dB = _regularized_terms(g, uh, Bh, kernel.spectrum, _hall_on(state))
    return fields.to_physical(g, du - g.k_squared * uh), fields.to_physical(g, dB - g.k_squared * Bh)


def _regularized_terms(g: Grid, uh, Bh, filt, hall):
    u = fields.to_physical(g, uh)
    u_eps = fields.to_physical(g, uh * filt)
    B_eps = fields.to_physical(g, Bh * filt)
    J = fields.to_physical(g, fields.curl_hat(g, Bh))
    lorentz = fields.to_spectral(cross(J, B_eps))
    du = fields.leray_hat(g, lorentz - fields.tensor_div_hat(g, fields.to_spectral(outer(u, u_eps))))
    dB = fields.curl_hat(g, fields.to_spectral(cross(u, B_eps) - hall * cross(J, B_eps)))
    return du, dB


def _plain_terms(g: Grid, uh, Bh, hall):
    u = fields.to_physical(g, uh)
    B = fields.to_physical(g, Bh)
    J = fields.to_physical(g, fields.curl_hat(g, Bh))
    du = -fields.leray_hat(g, fields.tensor_div_hat(g, _stress_hat(u, B)))
    dB = fields.curl_hat(g, fields.to_spectral(cross(u, B) - hall * cross(J, B)))
    return du, dB


def stable_dt(state: MhdState) -> float:
    """``min(0.2 h^2 / max(1, max|B|), 0.25 h / max(1, max|u| + max|B|))``."""
    h = state.grid.h
    umax = float(np.sqrt(dot(state.u, state.u).max()))
    bmax = float(np.sqrt(dot(state.B, state.B).max()))
    return min(0.2 * h * h / max(1.0, bmax), 0.25 * h / max(1.0, umax + bmax))


def step(
    state: MhdState, dt: float | None = None, check_stability: bool = True, dealias: bool = True
) -> MhdState:
    """One integrating-factor RK4 step, then projection.

    ``dealias=False`` skips the 2/3 truncation of the nonlinear terms; it
    exists to produce deliberately aliased runs for monitor validation.
    """
    g = state.grid
    limit = stable_dt(state)
    if dt is None:
        dt = limit
    elif check_stability and dt > limit * (1 + 1e-9):
        raise StabilityError(f"dt={dt!r} exceeds the MHD stability bound {limit!r}")
    mask = g.dealias_mask if dealias else 1.0
    hall = _hall_on(state)
    filt = state.kernel.spectrum if state.regularized else None

    def nonlinear(s):
        uh, Bh = s
        if filt is None:
            du, dB = _plain_terms(g, uh, Bh, hall)
        else:
            du, dB = _regularized_terms(g, uh, Bh, filt, hall)
        return du * mask, dB * mask

    start = (fields.to_spectral(state.u), fields.to_spectral(state.B))
    uh, Bh = lawson_rk4(g, start, dt, nonlinear, (True, True))
    t = state.t + dt
    if not (np.all(np.isfinite(uh)) and np.all(np.isfinite(Bh))):
        raise BlowUpError(t)
    u = fields.to_physical(g, fields.leray_hat(g, uh))
    B = fields.to_physical(g, fields.leray_hat(g, Bh))
    return state.replace(t=t, u=u, B=B)


def simulate(
    state: MhdState, t_end: float, dt: float | None = None, sample_every: int = 1, dealias: bool = True
):
    """Yield the initial state, every ``sample_every``-th state and the final state."""
    steps, dt = step_count(state.t, t_end, dt if dt is not None else stable_dt(state))
    yield state
    for i in range(1, steps + 1):
        state = step(state, dt, dealias=dealias)
        if i % sample_every == 0 or i == steps:
            yield state


def run(
    state: MhdState, t_end: float, dt: float | None = None, sample_every: int = 1, dealias: bool = True
) -> Trajectory:
    return Trajectory(state.grid, state.variant, list(simulate(state, t_end, dt, sample_every, dealias)))


# ---------------------------------------------------------------------------
# monitors


def energy(state: MhdState) -> float:
    g = state.grid
    return 0.5 * (fields.inner_product(g, state.u, state.u) + fields.inner_product(g, state.B, state.B))


def dissipation(state: MhdState) -> float:
    g = state.grid
    w, J = fields.curl(g, state.u), fields.curl(g, state.B)
    return fields.inner_product(g, w, w) + fields.inner_product(g, J, J)


def energy_report(trajectory: Trajectory, quadrature: str = "simpson") -> BalanceReport:
    """``E = (|u|^2 + |B|^2) / 2``, ``D = |curl u|^2 + |curl B|^2``; extra ``max_div``."""
    if len(trajectory) < 2:
        raise DataError("energy_report needs at least two samples")
    law = f"{trajectory[0].variant}-energy"
    states = list(trajectory)
    max_div = [max(c["div_u"], c["div_B"]) for c in (s.constraints() for s in states)]
    report = build_report(
        law, trajectory.times, [energy(s) for s in states], [dissipation(s) for s in states], quadrature
    )
    report.extras = {"max_div": np.array(max_div)}
    return report


def helicity(state: MhdState, kind: str) -> tuple[float, float]:
    """Global helicity of the given kind and its dissipation rate."""
    g = state.grid
    u, B = state.u, state.B
    w = fields.curl(g, u)
    J = fields.curl(g, B)
    if kind == "magneto":
        A = fields.biot_savart(g, B)
        return fields.inner_product(g, A, B), 2.0 * fields.inner_product(g, B, J)
    if kind == "fluid":
        rate = fields.curl(g, w) + cross(B, J)
        return fields.inner_product(g, u, w), 2.0 * fields.inner_product(g, w, rate)
    if kind == "crossed":
        return fields.inner_product(g, u, B), 2.0 * fields.inner_product(g, w, J)
    if kind == "total":
        A = fields.biot_savart(g, B)
        s = w + B
        return fields.inner_product(g, u + A, s), 2.0 * fields.inner_product(g, s, fields.curl(g, s))
    raise ParameterError(f"unknown helicity kind {kind!r}; expected one of {HELICITY_KINDS}")


def check_helicity_kind(kind: str, variant: str) -> None:
    if kind not in HELICITY_KINDS:
        raise ParameterError(f"unknown helicity kind {kind!r}; expected one of {HELICITY_KINDS}")
    if kind == "crossed" and variant != "mhd":
        raise UsageError("crossed helicity is only balanced for the mhd variant")
    if kind == "total" and variant != "hmhd":
        raise UsageError("total helicity is only balanced for the hmhd variant")


def helicity_report(trajectory: Trajectory, kind: str = "magneto", quadrature: str = "simpson") -> BalanceReport:
    if len(trajectory) < 2:
        raise DataError("helicity_report needs at least two samples")
    variant = trajectory[0].variant
    check_helicity_kind(kind, variant)
    law = {"magneto": f"{variant}-magneto-helicity", "fluid": "fluid-helicity"}.get(kind, f"{kind}-helicity")
    pairs = [helicity(s, kind) for s in trajectory]
    return build_report(law, trajectory.times, [p[0] for p in pairs], [p[1] for p in pairs], quadrature)


def _check_comparable(run_a: Trajectory, run_b: Trajectory, check_initial: bool):
    if run_a.grid != run_b.grid:
        raise ComparisonError(f"grid mismatch: {run_a.grid} vs {run_b.grid}")
    if len(run_a) != len(run_b) or not np.allclose(run_a.times, run_b.times, rtol=0, atol=1e-12):
        raise ComparisonError("sample times differ between the two runs")
    if check_initial:
        for name in ("u", "B"):
            diff = np.max(np.abs(getattr(run_a[0], name) - getattr(run_b[0], name)))
            if diff > 1e-12:
                raise ComparisonError(f"initial data differ in {name} by {diff:.3e}")


def weak_strong_gap_hall(
    run_a: Trajectory, run_b: Trajectory, quadrature: str = "simpson", check_initial: bool = True
) -> GapSeries:
    """``J(t) = (|du|^2 + |dB|^2) / 2 + int_0^t (|curl du|^2 + |curl dB|^2)`` for run differences.

    The magnetic part alone is in ``parts["magnetic"]``. ``check_initial=False``
    admits perturbed initial data.
    """
    _check_comparable(run_a, run_b, check_initial)
    g = run_a.grid
    kin, mag, rate_u, rate_b = [], [], [], []
    for a, b in zip(run_a, run_b):
        du, dB = a.u - b.u, a.B - b.B
        kin.append(0.5 * fields.inner_product(g, du, du))
        mag.append(0.5 * fields.inner_product(g, dB, dB))
        cu, cb = fields.curl(g, du), fields.curl(g, dB)
        rate_u.append(fields.inner_product(g, cu, cu))
        rate_b.append(fields.inner_product(g, cb, cb))
    times = run_a.times
    if len(times) > 1:
        cum_u = cumulative_integral(rate_u, times, quadrature)
        cum_b = cumulative_integral(rate_b, times, quadrature)
    else:
        cum_u = cum_b = np.zeros(1)
    magnetic = np.array(mag) + cum_b
    values = magnetic + np.array(kin) + cum_u
    return GapSeries("J_hmhd", times, values, {"magnetic": magnetic, "kinetic": np.array(kin) + cum_u})


# ---------------------------------------------------------------------------
# initial data


def abc_field(grid: Grid, a: float = 1.0, b: float = 1.0, c: float = 1.0) -> np.ndarray:
    """Unit-wavenumber ABC field; ``curl v = v``."""
    x1, x2, x3 = grid.mesh()
    return np.stack(
        [a * np.sin(x3) + c * np.cos(x2), b * np.sin(x1) + a * np.cos(x3), c * np.sin(x2) + b * np.cos(x1)]
    )


def preset(
    grid: Grid,
    name: str = "beltrami",
    seed: int = 0,
    variant: str = "hmhd",
    eps: float | None = None,
    kernel_kind: str = "bump",
    amplitude: float = 1.0,
    kmax: float = 4.0,
    spectral_slope: float = 0.0,
) -> MhdState:
    """Initial data.

    ``beltrami``: ``u = 0``, ``B`` the ABC field with ``a = b = c = amplitude``.
    ``orszag-tang``: the three-dimensional Orszag-Tang vortex scaled by ``amplitude``.
    ``random``: band-limited solenoidal ``u`` and ``B`` (``1 <= |k| <= kmax``,
    weights ``|k|^-spectral_slope``), each scaled to max norm ``amplitude``.
    ``taylor-green``: Taylor-Green velocity, ``B = 0``.
    """
    x1, x2, x3 = grid.mesh()
    zero = grid.zeros()
    if name == "zero":
        u, B = zero, zero.copy()
    elif name == "beltrami":
        u, B = zero, abc_field(grid, amplitude, amplitude, amplitude)
    elif name == "orszag-tang":
        u = amplitude * np.stack([-2 * np.sin(x2), 2 * np.sin(x1), np.zeros_like(x1)])
        B = amplitude * np.stack([-2 * np.sin(2 * x2) + np.sin(x3), 2 * np.sin(x1) + np.sin(x3), np.sin(x1) + np.sin(x2)])
    elif name == "random":

        def noise(offset):
            v = fields.leray_project(grid, fields.band_limited_noise(grid, seed * 7919 + offset, kmax, 1, spectral_slope))
            return amplitude * v / np.sqrt(dot(v, v).max())

        u, B = noise(1), noise(2)
    elif name == "taylor-green":
        u = amplitude * np.stack(
            [np.sin(x1) * np.cos(x2) * np.cos(x3), -np.cos(x1) * np.sin(x2) * np.cos(x3), np.zeros_like(x1)]
        )
        B = zero
    else:
        raise ParameterError(f"unknown MHD preset {name!r}; expected one of {PRESETS}")
    return MhdState(grid, 0.0, u, B, variant, eps, kernel_kind)
