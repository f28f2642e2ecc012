"""Records returned by the balance monitors and gap functionals."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .timestepping import cumulative_integral


@dataclass
class BalanceReport:
    """Global balance ``Q(t) + int_0^t D = Q(0)`` sampled along a trajectory.

    ``density`` is the global energy or helicity, ``dissipation`` its global
    dissipation rate and ``residual = density + cumulative - density[0]``.
    ``extras`` holds law-specific series (Ginzburg-Landau energy, max |m|, ...);
    ``anomalous`` maps a window name to its anomalous-dissipation integral.
    """

    law: str
    times: np.ndarray
    density: np.ndarray
    dissipation: np.ndarray
    cumulative: np.ndarray
    residual: np.ndarray
    extras: dict = field(default_factory=dict)
    anomalous: dict = field(default_factory=dict)

    @property
    def quantity(self) -> str:
        return "E" if self.law.endswith("energy") else "H"

    @property
    def final_residual(self) -> float:
        return float(self.residual[-1])

    @property
    def relative_residual(self) -> float:
        """``|residual(T)|`` over ``|Q(0)|`` (the raw value when ``Q(0) = 0``)."""
        scale = abs(float(self.density[0]))
        return abs(self.final_residual) / scale if scale > 0 else abs(self.final_residual)

    def columns(self) -> dict:
        q = self.quantity
        return {"t": self.times, q: self.density, "D": self.dissipation, "cumD": self.cumulative, "residual": self.residual}

    def to_json(self) -> dict:
        out = {
            "law": self.law,
            "initial": float(self.density[0]),
            "final": float(self.density[-1]),
            "cumulative_dissipation": float(self.cumulative[-1]),
            "residual": self.final_residual,
            "relative_residual": self.relative_residual,
        }
        for name, series in self.extras.items():
            out[name] = float(np.asarray(series)[-1])
        if self.anomalous:
            out["anomalous"] = {k: float(v) for k, v in self.anomalous.items()}
        return out


@dataclass
class GapSeries:
    """Two-run gap functional sampled at common times; ``parts`` holds its components."""

    name: str
    times: np.ndarray
    values: np.ndarray
    parts: dict = field(default_factory=dict)

    @property
    def terminal(self) -> float:
        return float(self.values[-1])


def build_report(law, times, density, dissipation, method="simpson", extras=None) -> BalanceReport:
    times = np.asarray(times, dtype=float)
    density = np.asarray(density, dtype=float)
    dissipation = np.asarray(dissipation, dtype=float)
    cumulative = cumulative_integral(dissipation, times, method)
    residual = density + cumulative - density[0]
    return BalanceReport(law, times, density, dissipation, cumulative, residual, extras or {})
