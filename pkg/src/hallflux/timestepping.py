"""Integrating-factor RK4 (Lawson) and the sampled-trajectory container."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import DataError
from .fields import Grid


def lawson_rk4(grid: Grid, state, dt: float, nonlinear, diffusive):
    """Advance a tuple of half-spectrum arrays by one step.

    Variables flagged in ``diffusive`` carry a linear ``lap`` term that is
    integrated exactly through the factor ``exp(-|k|^2 t)``; ``nonlinear``
    returns the remaining right-hand side for every variable.
    """
    half = np.exp(-0.5 * dt * grid.k_squared)

    def e_half(x, i):
        return x * half if diffusive[i] else x

    def e_full(x, i):
        return x * half * half if diffusive[i] else x

    idx = range(len(state))
    a = nonlinear(state)
    b = nonlinear(tuple(e_half(state[i] + 0.5 * dt * a[i], i) for i in idx))
    c = nonlinear(tuple(e_half(state[i], i) + 0.5 * dt * b[i] for i in idx))
    d = nonlinear(tuple(e_full(state[i], i) + dt * e_half(c[i], i) for i in idx))
    return tuple(
        e_full(state[i], i) + dt / 6.0 * (e_full(a[i], i) + 2.0 * e_half(b[i] + c[i], i) + d[i]) for i in idx
    )


def step_count(t_start: float, t_end: float, dt: float) -> tuple[int, float]:
    """Number of uniform steps covering ``[t_start, t_end]`` with step at most ``dt``."""
    span = t_end - t_start
    if span < 0:
        raise DataError(f"t_end={t_end!r} precedes the state time {t_start!r}")
    if span == 0:
        return 0, dt
    steps = max(1, int(np.ceil(span / dt - 1e-9)))
    return steps, span / steps


@dataclass
class Trajectory:
    """Solver states sampled in time, all on one grid and of one system."""

    grid: Grid
    system: str
    states: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states], dtype=float)

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, i):
        return self.states[i]

    def append(self, state):
        self.states.append(state)


def cumulative_integral(values, times, method: str = "simpson") -> np.ndarray:
    """Running time integral starting at 0.

    ``simpson`` is fourth-order accurate on smooth data (falls back to the
    trapezoid rule for fewer than three samples); ``trapezoid`` is the plain
    composite rule.
    """
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    if len(times) < 2:
        raise DataError("a time integral needs at least two samples")
    if method == "simpson" and len(times) >= 3:
        return cumulative_simpson(values, x=times, initial=0.0)
    if method not in ("simpson", "trapezoid"):
        raise DataError(f"unknown quadrature {method!r}")
    steps = 0.5 * (values[1:] + values[:-1]) * np.diff(times)
    return np.concatenate(([0.0], np.cumsum(steps)))


def time_derivative(values, times) -> np.ndarray:
    """Second-order finite differences along the first axis (one-sided at the ends)."""
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    if len(times) < 3:
        raise DataError("centered time differences need at least three samples")
    return np.gradient(values, times, axis=0, edge_order=2)
