"""Local balance laws, mollifier anomalous dissipation and their monitors.

Every law has a local form ``d/dt e + d + div f = 0`` for smooth solutions.
Smoothing the equations with a mollifier of radius ``eps`` gives

    d/dt e_eps + d_eps + div f_eps = da_eps

where ``e_eps, d_eps, f_eps`` are the same formulas evaluated on mollified
fields and ``da_eps`` is built from the commutators ``A, B, C`` of
:mod:`hallflux.mollify`. Time derivatives of the unknowns (``dm/dt``,
``dA/dt``, ...) are taken from the unregularized right-hand sides.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fields, hmhd, mll
from .balance import BalanceReport, build_report
from .errors import DataError, LawNotImplementedError, ParameterError, UsageError
from .fields import Grid, cross, dot
from .mollify import MollifierKernel, commutator_unchecked, make_mollifier
from .timestepping import Trajectory, cumulative_integral, time_derivative

LAWS = (
    "mll-energy",
    "hmhd-energy",
    "mhd-energy",
    "hmhd-magneto-helicity",
    "mhd-magneto-helicity",
    "fluid-helicity",
    "crossed-helicity",
    "total-helicity",
)
ANOMALOUS_LAWS = (
    "mll-energy",
    "hmhd-energy",
    "mhd-energy",
    "hmhd-magneto-helicity",
    "mhd-magneto-helicity",
    "crossed-helicity",
)
EXACT_ZERO = "exact-zero"


@dataclass
class DensityTriple:
    law: str
    density: np.ndarray
    dissipation: np.ndarray
    flux: np.ndarray


def check_law(state, law: str) -> None:
    """Raise :class:`UsageError` unless ``law`` applies to the system of ``state``."""
    if law not in LAWS:
        raise ParameterError(f"unknown law {law!r}; expected one of {LAWS}")
    if law == "mll-energy":
        if not isinstance(state, mll.MllState):
            raise UsageError("mll-energy needs an MLL state")
        return
    if not isinstance(state, hmhd.MhdState):
        raise UsageError(f"{law} needs an MHD or HMHD state")
    needed = {"hmhd-energy": "hmhd", "hmhd-magneto-helicity": "hmhd", "total-helicity": "hmhd",
              "mhd-energy": "mhd", "mhd-magneto-helicity": "mhd", "crossed-helicity": "mhd"}.get(law)
    if needed and state.variant != needed:
        raise UsageError(f"{law} applies to the {needed} variant, not {state.variant}")


def _hall(law: str) -> float:
    return 1.0 if law.startswith("hmhd") or law == "total-helicity" else 0.0


def _needs_potential(law: str) -> bool:
    return law.endswith("magneto-helicity") or law == "total-helicity"


# ---------------------------------------------------------------------------
# field bundles


def _smoother(kernel: MollifierKernel | None):
    if kernel is None:
        return lambda fh: fh
    return lambda fh: fh * kernel.spectrum


def _mll_bundle(state: mll.MllState, kernel=None) -> dict:
    g = state.grid
    sm = _smoother(kernel)
    dm = mll.rhs_mll(state)[0]
    mh = sm(fields.to_spectral(state.m))
    b = {
        "m": fields.to_physical(g, mh),
        "grad_m": fields.to_physical(g, fields.grad_hat(g, mh)),
        "E": fields.to_physical(g, sm(fields.to_spectral(state.E))),
        "H": fields.to_physical(g, sm(fields.to_spectral(state.H))),
        "dm": fields.to_physical(g, sm(fields.to_spectral(dm))),
    }
    return b


def _mhd_bundle(state: hmhd.MhdState, law: str, kernel=None, with_rates=True) -> dict:
    g = state.grid
    sm = _smoother(kernel)
    uh = sm(fields.to_spectral(state.u))
    Bh = sm(fields.to_spectral(state.B))
    b = {
        "u": fields.to_physical(g, uh),
        "B": fields.to_physical(g, Bh),
        "w": fields.to_physical(g, fields.curl_hat(g, uh)),
        "J": fields.to_physical(g, fields.curl_hat(g, Bh)),
        "p": fields.to_physical(g, sm(fields.to_spectral(state.p))),
    }
    b["curl_w"] = fields.to_physical(g, fields.curl_hat(g, fields.curl_hat(g, uh)))
    if _needs_potential(law):
        fields.biot_savart(g, state.B)  # gauge check with a readable error
        b["A"] = fields.to_physical(g, fields.biot_savart_hat(g, Bh))
    if with_rates and law in ("hmhd-magneto-helicity", "mhd-magneto-helicity", "total-helicity"):
        du, dB = hmhd.rhs(state)
        b["du"] = fields.to_physical(g, sm(fields.to_spectral(du)))
        b["dA"] = fields.to_physical(g, fields.biot_savart_hat(g, sm(fields.to_spectral(dB))))
    return b


def _bundle(state, law, kernel=None):
    if law == "mll-energy":
        return _mll_bundle(state, kernel)
    return _mhd_bundle(state, law, kernel)


# ---------------------------------------------------------------------------
# density triples


def _triple(law: str, b: dict) -> DensityTriple:
    if law == "mll-energy":
        # grad_m[j, i] = d_j m_i
        m_grad, dm, E, H = b["grad_m"], b["dm"], b["E"], b["H"]
        e = dot(E, E) + dot(H, H) + np.sum(m_grad * m_grad, axis=(0, 1))
        d = dot(dm, dm)
        f = -2.0 * np.einsum("i...,ji...->j...", dm, m_grad) - 2.0 * cross(H, E)
        return DensityTriple(law, e, d, f)
    u, B, w, J, p = b["u"], b["B"], b["w"], b["J"], b["p"]
    if law in ("hmhd-energy", "mhd-energy"):
        e = 0.5 * (dot(u, u) + dot(B, B))
        d = dot(w, w) + dot(J, J)
        JB = cross(J, B)
        f = (0.5 * dot(u, u) + p) * u + cross(B, cross(u, B)) + cross(w, u) + JB
        if law == "hmhd-energy":
            f = f + cross(JB, B)
        return DensityTriple(law, e, d, f)
    if law.endswith("magneto-helicity"):
        A, dA = b["A"], b["dA"]
        drive = 2.0 * cross(u - _hall(law) * J, B) - 2.0 * J - dA
        return DensityTriple(law, dot(A, B), 2.0 * dot(B, J), cross(A, drive))
    if law == "fluid-helicity":
        rate = b["curl_w"] + cross(B, J)
        f = dot(w, u) * u + (p - 0.5 * dot(u, u)) * w - cross(u, rate)
        return DensityTriple(law, dot(u, w), 2.0 * dot(w, rate), f)
    if law == "crossed-helicity":
        f = dot(u, B) * u + (p - 0.5 * dot(u, u)) * B + cross(w, B) + cross(J, u)
        return DensityTriple(law, dot(u, B), 2.0 * dot(w, J), f)
    # total helicity: V = u + A, W = curl V = w + B
    V = u + b["A"]
    W = w + B
    curl_W = b["curl_w"] + J
    dV = b["du"] + b["dA"]
    f = cross(dV - 2.0 * cross(u, W) + 2.0 * curl_W, V)
    return DensityTriple(law, dot(V, W), 2.0 * dot(W, curl_W), f)


def local_densities(state, law: str) -> DensityTriple:
    """Density, dissipation and flux of ``law`` at one state."""
    check_law(state, law)
    return _triple(law, _bundle(state, law))


def mollified_densities(state, law: str, kernel: MollifierKernel) -> DensityTriple:
    """The same triple evaluated on the mollified fields."""
    check_law(state, law)
    return _triple(law, _bundle(state, law, kernel))


# ---------------------------------------------------------------------------
# anomalous fields


def _curl(g, v):
    return fields.to_physical(g, fields.curl_hat(g, fields.to_spectral(v)))


def anomalous_field(state, law: str, kernel: MollifierKernel) -> np.ndarray:
    """Commutator expression for ``da_eps`` of ``law`` at one state."""
    check_law(state, law)
    if law not in ANOMALOUS_LAWS:
        raise LawNotImplementedError(f"no anomalous-dissipation formula is available for {law}")
    if kernel.grid != state.grid:
        raise ParameterError("kernel and state live on different grids")
    g = state.grid
    sm = lambda f: fields.to_physical(g, fields.to_spectral(f) * kernel.spectrum)  # noqa: E731

    def comm(a, b, kind, smoothed=None):
        return commutator_unchecked(a, b, kind, kernel, smoothed)

    if law == "mll-energy":
        dm = mll.rhs_mll(state)[0]
        lap_m = fields.laplacian(g, state.m)
        q = dm - 2.0 * (state.H + lap_m)
        q_eps = sm(q)
        return -dot(comm(state.m, q, "wedge", (sm(state.m), q_eps)), q_eps)

    u, B = state.u, state.B
    u_eps, B_eps = sm(u), sm(B)
    hall = _hall(law)
    B_uB = comm(u, B, "wedge", (u_eps, B_eps))
    C_BB = comm(B, B, "tensor", (B_eps, B_eps))
    if law.endswith("magneto-helicity"):
        A_eps = fields.biot_savart(g, B_eps)
        out = 2.0 * dot(A_eps, _curl(g, B_uB))
        if hall:
            out -= 2.0 * dot(A_eps, _curl(g, fields.div(g, C_BB)))
        return out
    C_uu = comm(u, u, "tensor", (u_eps, u_eps))
    A_BB = comm(B, B, "dot", (B_eps, B_eps))
    stress = fields.div(g, C_uu - C_BB)
    grad_A = fields.grad(g, A_BB)
    if law == "crossed-helicity":
        return -dot(B_eps, stress) - 0.5 * dot(B_eps, grad_A) + dot(u_eps, _curl(g, B_uB))
    out = -dot(u_eps, stress) - 0.5 * dot(u_eps, grad_A) + dot(B_eps, _curl(g, B_uB))
    if hall:
        out -= dot(B_eps, _curl(g, fields.div(g, C_BB)))
    return out


# ---------------------------------------------------------------------------
# identity residual


def _density_only(state, law, kernel):
    g = state.grid
    sm = _smoother(kernel)
    if law == "mll-energy":
        mh = sm(fields.to_spectral(state.m))
        E = fields.to_physical(g, sm(fields.to_spectral(state.E)))
        H = fields.to_physical(g, sm(fields.to_spectral(state.H)))
        m_grad = fields.to_physical(g, fields.grad_hat(g, mh))
        return dot(E, E) + dot(H, H) + np.sum(m_grad * m_grad, axis=(0, 1))
    uh = sm(fields.to_spectral(state.u))
    Bh = sm(fields.to_spectral(state.B))
    u, B = fields.to_physical(g, uh), fields.to_physical(g, Bh)
    if law.endswith("energy"):
        return 0.5 * (dot(u, u) + dot(B, B))
    if law == "crossed-helicity":
        return dot(u, B)
    w = fields.to_physical(g, fields.curl_hat(g, uh))
    if law == "fluid-helicity":
        return dot(u, w)
    A = fields.to_physical(g, fields.biot_savart_hat(g, Bh))
    if law.endswith("magneto-helicity"):
        return dot(A, B)
    return dot(u + A, w + B)


def _instant_rate(state, law, kernel):
    """``d/dt e_eps`` from the right-hand side.

    Every density is quadratic in the unknowns, so the symmetric difference
    ``(e(X + X') - e(X - X')) / 2`` with ``X'`` the time derivative is exact.
    """
    if law == "mll-energy":
        dm, dE, dH = mll.rhs_mll(state)
        plus = state.replace(m=state.m + dm, E=state.E + dE, H=state.H + dH)
        minus = state.replace(m=state.m - dm, E=state.E - dE, H=state.H - dH)
    else:
        du, dB = hmhd.rhs(state)
        plus = state.replace(u=state.u + du, B=state.B + dB)
        minus = state.replace(u=state.u - du, B=state.B - dB)
    return 0.5 * (_density_only(plus, law, kernel) - _density_only(minus, law, kernel))


@dataclass
class IdentityResidual:
    """Residual ``d/dt e_eps + d_eps + div f_eps - da_eps`` per sample.

    ``l1`` and ``max`` are its norms, ``dissipation_l1`` is ``||d_eps||_1``
    for scale; ``fields`` holds the residual fields when requested.
    """

    law: str
    eps: float
    method: str
    times: np.ndarray
    l1: np.ndarray
    max: np.ndarray
    dissipation_l1: np.ndarray
    fields: list = field(default_factory=list)

    @property
    def worst_l1(self) -> float:
        return float(self.l1.max())

    @property
    def relative_l1(self) -> float:
        scale = float(self.dissipation_l1.max())
        return self.worst_l1 / scale if scale > 0 else self.worst_l1


def identity_residual(
    trajectory, law: str, kernel: MollifierKernel, method: str = "centered", keep_fields: bool = False
) -> IdentityResidual:
    """Residual of the mollified local identity along a trajectory.

    ``centered`` differentiates ``e_eps`` over the stored samples (second
    order, one-sided at the ends; needs three samples). ``rhs`` takes the
    time derivative from the right-hand side instead and accepts any number
    of samples, including a bare state.
    """
    states = _states(trajectory)
    if method not in ("centered", "rhs"):
        raise ParameterError(f"unknown differencing method {method!r}")
    if method == "centered" and len(states) < 3:
        raise DataError("centered time differences need at least three samples")
    for s in states:
        check_law(s, law)
    g = states[0].grid
    triples = [mollified_densities(s, law, kernel) for s in states]
    times = np.array([s.t for s in states], dtype=float)
    if method == "centered":
        rates = time_derivative(np.stack([t.density for t in triples]), times)
    else:
        rates = [_instant_rate(s, law, kernel) for s in states]
    l1, mx, dl1, kept = [], [], [], []
    for s, tr, rate in zip(states, triples, rates):
        r = rate + tr.dissipation + fields.div(g, tr.flux) - anomalous_field(s, law, kernel)
        l1.append(fields.lp_norm(g, r, 1))
        mx.append(float(np.max(np.abs(r))))
        dl1.append(fields.lp_norm(g, tr.dissipation, 1))
        if keep_fields:
            kept.append(r)
    return IdentityResidual(law, kernel.eps, method, times, np.array(l1), np.array(mx), np.array(dl1), kept)


def _states(source) -> list:
    if isinstance(source, Trajectory):
        return list(source)
    if isinstance(source, (mll.MllState, hmhd.MhdState)):
        return [source]
    return list(source)


# ---------------------------------------------------------------------------
# space-time windows


@dataclass(frozen=True)
class Window:
    """Test function ``chi(t, x) = time_profile(t) * prod_i ((1 + cos(x_i - c_i)) / 2)^power``.

    ``center=None`` gives a spatially constant window. The time profile is
    ``(4 s (1 - s))^2`` with ``s`` the fraction of the trajectory span
    (``"bump"``) or identically 1 (``"flat"``).
    """

    name: str
    center: tuple | None = None
    power: int = 2
    time_profile: str = "bump"

    def spatial(self, grid: Grid) -> np.ndarray:
        if self.center is None:
            return np.ones(grid.scalar_shape)
        x = grid.mesh()
        out = np.ones(grid.scalar_shape)
        for xi, ci in zip(x, self.center):
            out = out * (0.5 * (1.0 + np.cos(xi - ci))) ** self.power
        return out

    def spatial_gradient(self, grid: Grid) -> np.ndarray:
        if self.center is None:
            return grid.zeros()
        x = grid.mesh()
        factors = [(0.5 * (1.0 + np.cos(xi - ci))) for xi, ci in zip(x, self.center)]
        grads = []
        for i in range(3):
            q = self.power
            d = q * factors[i] ** (q - 1) * (-0.5 * np.sin(x[i] - self.center[i]))
            others = [factors[j] ** q for j in range(3) if j != i]
            grads.append(d * others[0] * others[1])
        return np.stack(grads)

    def temporal(self, times) -> tuple[np.ndarray, np.ndarray]:
        """Profile and its derivative at ``times``."""
        times = np.asarray(times, dtype=float)
        if self.time_profile == "flat" or len(times) < 2:
            return np.ones_like(times), np.zeros_like(times)
        if self.time_profile != "bump":
            raise ParameterError(f"unknown time profile {self.time_profile!r}")
        span = times[-1] - times[0]
        s = (times - times[0]) / span
        core = 4.0 * s * (1.0 - s)
        return core**2, 2.0 * core * 4.0 * (1.0 - 2.0 * s) / span


WINDOW_PRESETS = ("global", "octants", "local")


def window_preset(name: str, time_profile: str = "bump") -> list[Window]:
    """``global``: constant in space. ``octants``: eight bumps (power 2) centred
    at ``(pi/2 or 3pi/2)^3``. ``local``: one narrow bump (power 8) at ``(pi, pi, pi)``.
    """
    if name == "global":
        return [Window("global", None, 0, time_profile)]
    if name == "octants":
        out = []
        for i in range(8):
            c = tuple(np.pi / 2 + np.pi * ((i >> k) & 1) for k in (2, 1, 0))
            out.append(Window(f"octant{i}", c, 2, time_profile))
        return out
    if name == "local":
        return [Window("local", (np.pi, np.pi, np.pi), 8, time_profile)]
    raise ParameterError(f"unknown window preset {name!r}; expected one of {WINDOW_PRESETS}")


def _resolve_windows(windows) -> list[Window]:
    if windows is None:
        return window_preset("global")
    if isinstance(windows, str):
        return window_preset(windows)
    if isinstance(windows, Window):
        return [windows]
    out = []
    for w in windows:
        out.extend(_resolve_windows(w))
    return out


def _time_integral(values, times, quadrature="simpson") -> float:
    values = np.asarray(values, dtype=float)
    if len(times) == 1:
        return float(values[0])
    return float(cumulative_integral(values, times, quadrature)[-1])


def windowed_integral(grid: Grid, times, series, window: Window, quadrature: str = "simpson") -> float:
    """``int chi(t, x) q(t, x) dx dt`` for samples ``series`` of a scalar field.

    A single sample gives the spatial integral only.
    """
    chi_x = window.spatial(grid)
    chi_t, _ = window.temporal(times)
    spatial = [fields.integral(grid, chi_x * q) for q in series]
    if len(times) == 1:
        return float(spatial[0])
    return _time_integral(chi_t * np.array(spatial), times, quadrature)


def windowed_anomalous(source, law: str, kernel: MollifierKernel, windows=None, quadrature: str = "simpson") -> dict:
    """``{window name: int chi da_eps}`` for the commutator formula."""
    states = _states(source)
    g = states[0].grid
    fields_ = [anomalous_field(s, law, kernel) for s in states]
    times = np.array([s.t for s in states], dtype=float)
    return {w.name: windowed_integral(g, times, fields_, w, quadrature) for w in _resolve_windows(windows)}


# ---------------------------------------------------------------------------
# global balance


def global_balance(
    trajectory: Trajectory, law: str, windows=None, kernel: MollifierKernel | None = None, quadrature: str = "simpson"
) -> BalanceReport:
    """Space integrals of the local triple, time-integrated dissipation and residual.

    With a kernel, ``anomalous`` maps each window to ``int chi da_eps``.
    """
    states = _states(trajectory)
    if len(states) < 2:
        raise DataError("a global balance needs at least two samples")
    g = states[0].grid
    dens, diss = [], []
    for s in states:
        tr = local_densities(s, law)
        dens.append(fields.integral(g, tr.density))
        diss.append(fields.integral(g, tr.dissipation))
    report = build_report(law, [s.t for s in states], dens, diss, quadrature)
    if kernel is not None:
        report.anomalous = windowed_anomalous(states, law, kernel, windows, quadrature)
    return report


# ---------------------------------------------------------------------------
# suitability monitor


@dataclass
class SuitabilityEntry:
    eps: float
    window: str
    measured: float
    formula: float
    scale: float
    flagged: bool


@dataclass
class SuitabilityReport:
    """Windowed anomalous production per mollifier scale.

    ``measured`` is the weak form of ``d/dt e_eps + d_eps + div f_eps`` along
    the stored trajectory (so it sees whatever the time stepper really did);
    ``formula`` is the commutator expression; ``scale`` is ``int chi d_eps``.
    A window is flagged when ``measured > tolerance * scale``.
    """

    law: str
    tolerance: float
    regularized: bool
    entries: list

    @property
    def flagged(self) -> list:
        return [e for e in self.entries if e.flagged]

    @property
    def passed(self) -> bool:
        return not self.flagged


def measured_anomalous(states, law: str, kernel: MollifierKernel, window: Window, quadrature: str = "simpson"):
    """Weak form ``int [-chi_t e_eps + chi (d_eps) - grad chi . f_eps] + boundary terms``.

    Returns ``(measured, int chi d_eps)``.
    """
    g = states[0].grid
    times = np.array([s.t for s in states], dtype=float)
    chi_x = window.spatial(g)
    grad_chi = window.spatial_gradient(g)
    chi_t, dchi_t = window.temporal(times)
    e_int, d_int, f_int = [], [], []
    for s in states:
        tr = mollified_densities(s, law, kernel)
        e_int.append(fields.integral(g, chi_x * tr.density))
        d_int.append(fields.integral(g, chi_x * tr.dissipation))
        f_int.append(fields.integral(g, dot(grad_chi, tr.flux)))
    e_int, d_int, f_int = map(np.array, (e_int, d_int, f_int))
    boundary = chi_t[-1] * e_int[-1] - chi_t[0] * e_int[0]
    body = _time_integral(-dchi_t * e_int + chi_t * (d_int - f_int), times, quadrature)
    return boundary + body, _time_integral(chi_t * d_int, times, quadrature)


def suitability_monitor(
    trajectory: Trajectory,
    law: str = "hmhd-energy",
    kernels=None,
    windows="octants",
    tolerance: float = 1e-3,
    quadrature: str = "simpson",
) -> SuitabilityReport:
    """Sign check of the energy anomalous dissipation on a (regularized) run.

    ``kernels`` is a list of kernels or of radii (bump kernels are built for
    radii); the default is ``{4h, 8h}``.
    """
    states = _states(trajectory)
    if len(states) < 3:
        raise DataError("the suitability monitor needs at least three samples")
    g = states[0].grid
    for s in states:
        check_law(s, law)
    if kernels is None:
        kernels = [4 * g.h, 8 * g.h]
    kernels = [k if isinstance(k, MollifierKernel) else make_mollifier(g, float(k)) for k in kernels]
    times = np.array([s.t for s in states], dtype=float)
    entries = []
    for k in kernels:
        da = [anomalous_field(s, law, k) for s in states] if law in ANOMALOUS_LAWS else None
        for w in _resolve_windows(windows):
            measured, scale = measured_anomalous(states, law, k, w, quadrature)
            formula = windowed_integral(g, times, da, w, quadrature) if da is not None else float("nan")
            entries.append(SuitabilityEntry(k.eps, w.name, measured, formula, scale, bool(measured > tolerance * scale)))
    regularized = all(getattr(s, "regularized", getattr(s, "scheme", "") == "penalized") for s in states)
    return SuitabilityReport(law, tolerance, regularized, entries)


# ---------------------------------------------------------------------------
# epsilon ladders


@dataclass
class ConvergenceRecord:
    """``|int chi da_eps|`` across a ladder with a least-squares log-log fit.

    ``slope`` is :data:`EXACT_ZERO` when every ladder value vanishes.
    """

    law: str
    window: str
    eps: np.ndarray
    values: np.ndarray
    slope: float | str
    intercept: float
    r_squared: float

    @property
    def exact_zero(self) -> bool:
        return self.slope == EXACT_ZERO


def fit_loglog(x, y) -> tuple[float, float, float]:
    """Slope, intercept and R^2 of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    return float(slope), float(intercept), 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def convergence_study(
    source, law: str, eps_ladder, window: Window | str | None = None, kind: str = "bump", quadrature: str = "simpson"
) -> ConvergenceRecord:
    """Fit ``|int chi da_eps| ~ eps^slope`` over ``eps_ladder`` (at least three radii)."""
    eps_ladder = np.asarray(sorted(float(e) for e in eps_ladder))
    if len(eps_ladder) < 3:
        raise DataError("a convergence study needs at least three ladder points")
    states = _states(source)
    win = _resolve_windows(window)[0]
    g = states[0].grid
    values = np.array(
        [abs(windowed_anomalous(states, law, make_mollifier(g, e, kind), win, quadrature)[win.name]) for e in eps_ladder]
    )
    if np.all(values <= 1e-300):
        return ConvergenceRecord(law, win.name, eps_ladder, values, EXACT_ZERO, float("nan"), float("nan"))
    if np.any(values <= 1e-300):
        raise DataError("ladder values vanish at some but not all radii; no log-log fit possible")
    slope, intercept, r2 = fit_loglog(eps_ladder, values)
    return ConvergenceRecord(law, win.name, eps_ladder, values, slope, intercept, r2)
