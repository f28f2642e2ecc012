"""Maxwell-Landau-Lifshitz solver.

Unknowns are the magnetisation ``m`` and the fields ``E`` and ``H``:

    dm/dt + m ^ dm/dt = 2 m ^ (lap m + H)                        (strong)
    dm/dt - m ^ dm/dt = 2 (lap m + H - (H.m) m - (|m|^2-1) m / eps)  (penalized)
    dE/dt = curl H,   dH/dt = -curl E - dm/dt

with ``div E = 0`` and ``div(H + m) = 0``. The strong scheme renormalises
``|m| = 1`` after every step; the penalized scheme never touches ``|m|``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import fields
from .balance import BalanceReport, GapSeries, build_report
from .errors import BlowUpError, ComparisonError, DataError, ParameterError, StabilityError
from .fields import Grid, cross, dot
from .timestepping import Trajectory, cumulative_integral, lawson_rk4, step_count

SCHEMES = ("strong", "penalized")
PRESETS = ("zero", "uniform", "perturbed")


@dataclass(frozen=True, eq=False)
class MllState:
    grid: Grid
    t: float
    m: np.ndarray
    E: np.ndarray
    H: np.ndarray
    scheme: str = "strong"
    eps_pen: float | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ParameterError(f"unknown MLL scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.scheme == "penalized" and not (self.eps_pen and self.eps_pen > 0):
            raise ParameterError("the penalized scheme needs a positive eps_pen")
        for name in ("m", "E", "H"):
            fields.check_field(self.grid, getattr(self, name), 1, name)

    def replace(self, **changes) -> MllState:
        return dataclasses.replace(self, **changes)

    def constraints(self) -> dict:
        """Max-norm divergence defects and bounds on ``|m|``."""
        g = self.grid
        rho = dot(self.m, self.m)
        return {
            "div_E": float(np.max(np.abs(fields.div(g, self.E)))),
            "div_H_plus_m": float(np.max(np.abs(fields.div(g, self.H + self.m)))),
            "max_m": float(np.sqrt(rho.max())),
            "unit_defect": float(np.max(np.abs(rho - 1.0))),
        }


def gilbert_solve(m, g, sign: str = "plus") -> np.ndarray:
    """Pointwise solution of ``x + m ^ x = g`` (``plus``) or ``x - m ^ x = g`` (``minus``).

    Closed form ``x = (g -+ m ^ g + (m.g) m) / (1 + |m|^2)``; vectors sit on
    axis 0 so the same call handles single vectors and whole fields.
    """
    m = np.asarray(m, dtype=float)
    g = np.asarray(g, dtype=float)
    if sign == "plus":
        s = -1.0
    elif sign == "minus":
        s = 1.0
    else:
        raise ParameterError(f"sign must be 'plus' or 'minus', got {sign!r}")
    return (g + s * cross(m, g) + dot(m, g) * m) / (1.0 + dot(m, m))


def _magnetisation_rate(m, lap_m, H, scheme, eps_pen):
    if scheme == "strong":
        return gilbert_solve(m, 2.0 * cross(m, lap_m + H), "plus")
    penalty = (dot(m, m) - 1.0) / eps_pen
    g = 2.0 * (lap_m + H - dot(H, m) * m - penalty * m)
    return gilbert_solve(m, g, "minus")


def rhs_mll(state: MllState):
    """Pointwise time derivatives ``(dm/dt, dE/dt, dH/dt)`` without dealiasing."""
    g = state.grid
    lap_m = fields.to_physical(g, fields.laplacian_hat(g, fields.to_spectral(state.m)))
    dm = _magnetisation_rate(state.m, lap_m, state.H, state.scheme, state.eps_pen)
    dE = fields.to_physical(g, fields.curl_hat(g, fields.to_spectral(state.H)))
    dH = -fields.to_physical(g, fields.curl_hat(g, fields.to_spectral(state.E))) - dm
    return dm, dE, dH


def stable_dt(state: MllState) -> float:
    """``min(0.25 h^2, 0.5 h / max(1, max|H|))``, and ``0.25 eps_pen`` for the penalized scheme."""
    h = state.grid.h
    hmax = float(np.sqrt(dot(state.H, state.H).max()))
    dt = min(0.25 * h * h, 0.5 * h / max(1.0, hmax))
    if state.scheme == "penalized":
        dt = min(dt, 0.25 * state.eps_pen)
    return dt


def step(state: MllState, dt: float | None = None, check_stability: bool = True) -> MllState:
    """One integrating-factor RK4 step followed by constraint projection."""
    g = state.grid
    limit = stable_dt(state)
    if dt is None:
        dt = limit
    elif check_stability and dt > limit * (1 + 1e-9):
        raise StabilityError(f"dt={dt!r} exceeds the MLL stability bound {limit!r}")
    mask = g.dealias_mask
    ksq = g.k_squared
    scheme, eps_pen = state.scheme, state.eps_pen

    def nonlinear(s):
        mh, Eh, Hh = s
        m = fields.to_physical(g, mh)
        lap_m = fields.to_physical(g, -ksq * mh)
        H = fields.to_physical(g, Hh)
        xh = fields.to_spectral(_magnetisation_rate(m, lap_m, H, scheme, eps_pen)) * mask
        return (xh + ksq * mh * mask, fields.curl_hat(g, Hh), -fields.curl_hat(g, Eh) - xh)

    start = tuple(fields.to_spectral(f) for f in (state.m, state.E, state.H))
    mh, Eh, Hh = lawson_rk4(g, start, dt, nonlinear, (True, False, False))
    t = state.t + dt
    if not all(np.all(np.isfinite(f)) for f in (mh, Eh, Hh)):
        raise BlowUpError(t)
    if scheme == "strong":
        m = fields.to_physical(g, mh)
        norm = np.sqrt(dot(m, m))
        m = np.divide(m, norm, out=np.zeros_like(m), where=norm > 0)
        mh_new = fields.to_spectral(m)
        # keep H + m unchanged by the renormalisation
        Hh = Hh + mh - mh_new
        mh = mh_new
    else:
        m = fields.to_physical(g, mh)
    E = fields.to_physical(g, fields.leray_hat(g, Eh))
    H = fields.to_physical(g, fields.leray_hat(g, Hh + mh) - mh)
    return MllState(g, t, m, E, H, scheme, eps_pen)


def simulate(state: MllState, t_end: float, dt: float | None = None, sample_every: int = 1):
    """Yield the initial state, every ``sample_every``-th state and the final state.

    With ``dt=None`` the step is the stability bound of the initial state,
    shrunk so that a whole number of steps lands on ``t_end``.
    """
    steps, dt = step_count(state.t, t_end, dt if dt is not None else stable_dt(state))
    yield state
    for i in range(1, steps + 1):
        state = step(state, dt)
        if i % sample_every == 0 or i == steps:
            yield state


def run(state: MllState, t_end: float, dt: float | None = None, sample_every: int = 1) -> Trajectory:
    return Trajectory(state.grid, "mll", list(simulate(state, t_end, dt, sample_every)))


# ---------------------------------------------------------------------------
# monitors


def gradient_energy(grid: Grid, m: np.ndarray) -> float:
    """``int |grad m|^2`` via Parseval on the half spectrum."""
    mh = fields.to_spectral(m)
    weight = np.full(grid.k_squared.shape[-1], 2.0)
    weight[0] = 1.0
    if grid.n % 2 == 0:
        weight[-1] = 1.0
    total = np.sum(grid.k_squared * np.abs(mh) ** 2 * weight)
    return float(total * grid.cell_volume / grid.n**3)


def energy(state: MllState) -> float:
    g = state.grid
    return gradient_energy(g, state.m) + fields.inner_product(g, state.E, state.E) + fields.inner_product(g, state.H, state.H)


def ginzburg_landau_energy(state: MllState) -> float:
    if state.scheme != "penalized":
        return 0.0
    defect = dot(state.m, state.m) - 1.0
    return float(fields.integral(state.grid, defect**2) / (2.0 * state.eps_pen))


def energy_report(trajectory: Trajectory, quadrature: str = "simpson") -> BalanceReport:
    """Energy balance ``E(T) + int D = E(0)`` with ``D = int |dm/dt|^2``.

    Extras: ``gl_energy`` (penalty energy), ``penalty_residual`` (the balance
    including the penalty energy and the exchange term ``-2 (H.m)(m.dm/dt)``,
    which closes exactly for the penalized scheme) and ``max_m``.
    """
    if len(trajectory) < 2:
        raise DataError("energy_report needs at least two samples")
    g = trajectory.grid
    times, dens, diss, gl, exchange, max_m = [], [], [], [], [], []
    for s in trajectory:
        dm, _, _ = rhs_mll(s)
        times.append(s.t)
        dens.append(energy(s))
        diss.append(fields.inner_product(g, dm, dm))
        gl.append(ginzburg_landau_energy(s))
        exchange.append(-2.0 * fields.integral(g, dot(s.H, s.m) * dot(s.m, dm)) if s.scheme == "penalized" else 0.0)
        max_m.append(float(np.sqrt(dot(s.m, s.m).max())))
    report = build_report("mll-energy", times, dens, diss, quadrature)
    gl = np.array(gl)
    cum_exchange = cumulative_integral(exchange, report.times, quadrature)
    report.extras = {
        "gl_energy": gl,
        "penalty_residual": report.residual + gl - gl[0] - cum_exchange,
        "max_m": np.array(max_m),
    }
    return report


def _check_comparable(run_a: Trajectory, run_b: Trajectory, names):
    if run_a.grid != run_b.grid:
        raise ComparisonError(f"grid mismatch: {run_a.grid} vs {run_b.grid}")
    if len(run_a) != len(run_b) or not np.allclose(run_a.times, run_b.times, rtol=0, atol=1e-12):
        raise ComparisonError("sample times differ between the two runs")
    for name in names:
        diff = np.max(np.abs(getattr(run_a[0], name) - getattr(run_b[0], name)))
        if diff > 1e-12:
            raise ComparisonError(f"initial data differ in {name} by {diff:.3e}")


def weak_strong_gap_mll(run_a: Trajectory, run_b: Trajectory, quadrature: str = "simpson") -> GapSeries:
    """``L(t) = |dE|^2 + |dH|^2 + |grad dm|^2 + int_0^t |d/dt dm|^2`` for differences between runs."""
    _check_comparable(run_a, run_b, ("m", "E", "H"))
    g = run_a.grid
    field_part, rate = [], []
    for a, b in zip(run_a, run_b):
        dE, dH = a.E - b.E, a.H - b.H
        field_part.append(
            fields.inner_product(g, dE, dE) + fields.inner_product(g, dH, dH) + gradient_energy(g, a.m - b.m)
        )
        da = rhs_mll(a)[0] - rhs_mll(b)[0]
        rate.append(fields.inner_product(g, da, da))
    times = run_a.times
    field_part = np.array(field_part)
    cum = cumulative_integral(rate, times, quadrature) if len(times) > 1 else np.zeros(1)
    return GapSeries("L_mll", times, field_part + cum, {"fields": field_part, "cumulative_rate": cum})


# ---------------------------------------------------------------------------
# initial data


def preset(
    grid: Grid,
    name: str = "perturbed",
    seed: int = 0,
    scheme: str = "strong",
    eps_pen: float | None = None,
    amplitude: float = 0.2,
    kmax: float = 2.0,
    field_amplitude: float = 0.1,
) -> MllState:
    """Initial data.

    ``zero``: all fields vanish (only meaningful for the penalized scheme).
    ``uniform``: ``m = e3``, ``E = H = 0``.
    ``perturbed``: ``m = (e3 + amplitude * noise) / |...|`` with band-limited
    noise (``|k| <= kmax``), ``E`` a band-limited solenoidal field and ``H``
    projected so that ``div(H + m) = 0``; ``field_amplitude`` is the max of the
    seed fields before projection.
    """
    zero = grid.zeros()
    if name == "zero":
        return MllState(grid, 0.0, zero, zero.copy(), zero.copy(), scheme, eps_pen)
    m = zero.copy()
    m[2] = 1.0
    if name == "uniform":
        return MllState(grid, 0.0, m, zero.copy(), zero.copy(), scheme, eps_pen)
    if name != "perturbed":
        raise ParameterError(f"unknown MLL preset {name!r}; expected one of {PRESETS}")

    def noise(offset):
        v = fields.band_limited_noise(grid, seed * 7919 + offset, kmax)
        top = np.max(np.abs(v))
        return v / top if top > 0 else v

    m = m + amplitude * noise(1)
    m = m / np.sqrt(dot(m, m))
    E = fields.leray_project(grid, field_amplitude * noise(2))
    H0 = field_amplitude * noise(3)
    H = fields.to_physical(grid, fields.leray_hat(grid, fields.to_spectral(H0 + m)) - fields.to_spectral(m))
    return MllState(grid, 0.0, m, E, H, scheme, eps_pen)

