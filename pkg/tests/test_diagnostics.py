import math

import numpy as np
import pytest

from hallflux import diagnostics as dg
from hallflux import fields, hmhd, mll
from hallflux.errors import DataError, GaugeError, LawNotImplementedError, ParameterError, UsageError
from hallflux.fields import cross, dot
from hallflux.mollify import make_mollifier, smooth

from helpers import abc_field


def sine_state(grid):
    """u = 0, B = (0, 0, sin x1): e = sin^2/2, d = cos^2, f = (-cs, cs^2, 0) with c = cos, s = sin."""
    B = grid.zeros()
    B[2] = np.sin(grid.mesh()[0])
    return hmhd.MhdState(grid, 0.0, grid.zeros(), B)


def direct_smooth(f, kernel):
    out = np.zeros_like(f)
    offsets, weights = kernel.shifts()
    for offset, w in zip(offsets, weights):
        out += w * np.roll(f, tuple(int(s) for s in offset), axis=(-3, -2, -1))
    return out


class TestCheckLaw:
    def test_unknown(self, grid8):
        with pytest.raises(ParameterError):
            dg.check_law(hmhd.preset(grid8, "zero"), "kinetic-energy")

    @pytest.mark.parametrize(
        "law,variant",
        [("mll-energy", "hmhd"), ("mhd-energy", "hmhd"), ("crossed-helicity", "hmhd"), ("total-helicity", "mhd"),
         ("hmhd-magneto-helicity", "mhd")],
    )
    def test_wrong_system(self, grid8, law, variant):
        with pytest.raises(UsageError):
            dg.check_law(hmhd.preset(grid8, "zero", variant=variant), law)

    def test_mhd_law_on_mll_state(self, grid8):
        with pytest.raises(UsageError):
            dg.local_densities(mll.preset(grid8, "uniform"), "hmhd-energy")


class TestLocalDensities:
    @pytest.mark.parametrize("law", ["hmhd-energy", "hmhd-magneto-helicity", "fluid-helicity", "total-helicity"])
    def test_zero_state(self, grid8, law):
        tr = dg.local_densities(hmhd.preset(grid8, "zero"), law)
        for f in (tr.density, tr.dissipation, tr.flux):
            assert np.max(np.abs(f)) == 0.0

    def test_mll_equilibrium(self, grid8):
        tr = dg.local_densities(mll.preset(grid8, "uniform"), "mll-energy")
        for f in (tr.density, tr.dissipation, tr.flux):
            assert np.max(np.abs(f)) == 0.0

    def test_sine_field(self, grid16):
        tr = dg.local_densities(sine_state(grid16), "hmhd-energy")
        x1 = grid16.mesh()[0]
        c, s = np.cos(x1), np.sin(x1)
        rng = np.random.default_rng(0)
        for idx in rng.integers(0, 16, size=(8, 3)):
            i = tuple(idx)
            assert tr.density[i] == pytest.approx(0.5 * s[i] ** 2, abs=1e-14)
            assert tr.dissipation[i] == pytest.approx(c[i] ** 2, abs=1e-14)
        expected = np.stack((-c * s, c * s * s, 0 * c))
        assert np.max(np.abs(tr.flux - expected)) <= 1e-14

    def test_hall_flux_difference(self, grid16):
        s = hmhd.preset(grid16, "random", seed=4, amplitude=0.8, kmax=2)
        f_hall = dg.local_densities(s, "hmhd-energy").flux
        f_mhd = dg.local_densities(s.replace(variant="mhd"), "mhd-energy").flux
        J = fields.curl(grid16, s.B)
        assert np.max(np.abs(f_hall - f_mhd - cross(cross(J, s.B), s.B))) <= 1e-12

    def test_mollified_is_plain_on_smoothed_fields(self, grid16):
        s = hmhd.preset(grid16, "random", seed=2, amplitude=0.5, kmax=2)
        k = make_mollifier(grid16, 4 * grid16.h)
        smoothed = s.replace(u=smooth(s.u, k), B=smooth(s.B, k))
        for law in ("hmhd-energy", "hmhd-magneto-helicity"):
            a = dg.mollified_densities(s, law, k)
            b = dg.local_densities(smoothed, law)
            assert np.max(np.abs(a.density - b.density)) <= 1e-14
            assert np.max(np.abs(a.dissipation - b.dissipation)) <= 1e-14


class TestIdentityResidual:
    @pytest.mark.parametrize(
        "variant,law",
        [("hmhd", "hmhd-energy"), ("hmhd", "hmhd-magneto-helicity"), ("mhd", "mhd-energy"),
         ("mhd", "mhd-magneto-helicity"), ("mhd", "crossed-helicity")],
    )
    def test_rhs_closure(self, grid16, variant, law):
        s = hmhd.preset(grid16, "random", seed=3, amplitude=0.5, kmax=2, variant=variant)
        r = dg.identity_residual(s, law, make_mollifier(grid16, 4 * grid16.h), method="rhs")
        assert r.worst_l1 <= 1e-12

    def test_mll_rhs_closure(self, grid32):
        s = mll.preset(grid32, "perturbed", seed=3, amplitude=0.3, field_amplitude=0.3)
        r = dg.identity_residual(s, "mll-energy", make_mollifier(grid32, 4 * grid32.h), method="rhs")
        assert r.relative_l1 <= 1e-8

    def test_guards(self, grid16):
        s = hmhd.preset(grid16, "random", seed=3)
        k = make_mollifier(grid16, 4 * grid16.h)
        with pytest.raises(DataError):
            dg.identity_residual(s, "hmhd-energy", k)
        with pytest.raises(ParameterError):
            dg.identity_residual(s, "hmhd-energy", k, method="upwind")
        with pytest.raises(LawNotImplementedError):
            dg.identity_residual(s, "fluid-helicity", k, method="rhs")

    def test_keep_fields(self, grid8):
        s = hmhd.preset(grid8, "random", seed=1, kmax=1)
        r = dg.identity_residual(s, "hmhd-energy", make_mollifier(grid8, 3 * grid8.h), "rhs", keep_fields=True)
        assert len(r.fields) == 1 and r.fields[0].shape == grid8.scalar_shape

    def test_beltrami_centered_converges(self, grid16):
        s = hmhd.preset(grid16, "beltrami", eps=4 * grid16.h)
        k = make_mollifier(grid16, 4 * grid16.h)
        errs = [dg.identity_residual(hmhd.run(s, 0.1, dt=dt), "hmhd-energy", k).worst_l1 for dt in (0.01, 0.005)]
        assert math.log2(errs[0] / errs[1]) >= 1.8


class TestAnomalousField:
    def test_constants_vanish(self, grid8):
        u, B = grid8.zeros(), grid8.zeros()
        u[0], B[2] = 0.3, -0.7
        s = hmhd.MhdState(grid8, 0.0, u, B)
        assert np.max(np.abs(dg.anomalous_field(s, "hmhd-energy", make_mollifier(grid8, 3 * grid8.h)))) == 0.0

    def test_mean_field_has_no_potential(self, grid8):
        B = grid8.zeros()
        B[2] = 1.0
        with pytest.raises(GaugeError):
            dg.anomalous_field(hmhd.MhdState(grid8, 0.0, grid8.zeros(), B), "hmhd-magneto-helicity",
                               make_mollifier(grid8, 3 * grid8.h))

    @pytest.mark.parametrize("law", ["fluid-helicity", "total-helicity"])
    def test_not_implemented(self, grid8, law):
        with pytest.raises(LawNotImplementedError):
            dg.anomalous_field(hmhd.preset(grid8, "zero"), law, make_mollifier(grid8, 3 * grid8.h))

    def test_kernel_grid_mismatch(self, grid8, grid16):
        with pytest.raises(ParameterError):
            dg.anomalous_field(hmhd.preset(grid8, "zero"), "hmhd-energy", make_mollifier(grid16, 4 * grid16.h))

    def test_mll_against_direct_convolution(self, grid16):
        s = mll.preset(grid16, "perturbed", seed=5, amplitude=0.3, field_amplitude=0.3)
        k = make_mollifier(grid16, 8 * grid16.h)
        q = mll.rhs_mll(s)[0] - 2.0 * (s.H + fields.laplacian(grid16, s.m))
        q_eps = direct_smooth(q, k)
        comm = direct_smooth(cross(s.m, q), k) - cross(direct_smooth(s.m, k), q_eps)
        expected = -dot(comm, q_eps)
        got = dg.anomalous_field(s, "mll-energy", k)
        assert np.max(np.abs(got - expected)) <= 1e-9 * np.max(np.abs(expected))

    def test_global_value_grows_with_radius(self, grid32):
        s = hmhd.preset(grid32, "random", seed=1, amplitude=0.5, kmax=1.5)
        rec = dg.convergence_study(s, "hmhd-magneto-helicity", [4 * grid32.h, 8 * grid32.h, 16 * grid32.h])
        assert np.all(np.diff(rec.values) > 0)


class TestWindows:
    def test_gradient_matches_spectral(self, grid32):
        w = dg.Window("w", (1.0, 2.0, 3.0), 3)
        spectral = fields.grad(grid32, w.spatial(grid32))
        assert np.max(np.abs(w.spatial_gradient(grid32) - spectral)) <= 1e-10

    def test_temporal_bump(self):
        times = np.linspace(0.0, 2.0, 9)
        chi, dchi = dg.Window("w").temporal(times)
        assert chi[0] == chi[-1] == 0.0 and chi[4] == 1.0
        h = 1e-6
        for i in range(1, 8):
            up, down = times.copy(), times.copy()
            up[i] += h
            down[i] -= h
            fd = (dg.Window("w").temporal(up)[0][i] - dg.Window("w").temporal(down)[0][i]) / (2 * h)
            assert fd == pytest.approx(dchi[i], abs=1e-6)

    def test_flat_profile(self):
        chi, dchi = dg.Window("w", time_profile="flat").temporal([0.0, 1.0])
        assert chi.tolist() == [1.0, 1.0] and dchi.tolist() == [0.0, 0.0]

    def test_presets(self):
        assert [len(dg.window_preset(n)) for n in dg.WINDOW_PRESETS] == [1, 8, 1]
        with pytest.raises(ParameterError):
            dg.window_preset("corners")
        with pytest.raises(ParameterError):
            dg.Window("w", time_profile="ramp").temporal([0.0, 1.0])

    def test_windowed_integral_of_one(self, grid8):
        times = np.linspace(0.0, 1.0, 201)
        ones = [np.ones(grid8.scalar_shape)] * len(times)
        flat = dg.windowed_integral(grid8, times, ones, dg.Window("g", time_profile="flat"))
        bump = dg.windowed_integral(grid8, times, ones, dg.Window("g"))
        assert flat == pytest.approx((2 * math.pi) ** 3, rel=1e-12)
        # int_0^1 (4 s (1 - s))^2 ds = 8/15
        assert bump == pytest.approx(8 / 15 * (2 * math.pi) ** 3, rel=1e-8)


class TestGlobalBalance:
    def test_beltrami_closed_form(self, grid16):
        s = hmhd.MhdState(grid16, 0.0, grid16.zeros(), abc_field(grid16))
        rep = dg.global_balance(hmhd.run(s, 0.1, dt=0.005), "hmhd-energy")
        e0 = 1.5 * (2 * math.pi) ** 3
        assert rep.density == pytest.approx(e0 * np.exp(-2 * rep.times), rel=1e-10)
        assert abs(rep.final_residual) <= 1e-8 * e0

    def test_anomalous_per_window(self, grid16):
        s = hmhd.preset(grid16, "random", seed=2, amplitude=0.3, kmax=2)
        tr = hmhd.run(s, 0.02)
        k = make_mollifier(grid16, 4 * grid16.h)
        rep = dg.global_balance(tr, "hmhd-energy", "octants", kernel=k)
        assert sorted(rep.anomalous) == [f"octant{i}" for i in range(8)]

    def test_needs_two_samples(self, grid8):
        with pytest.raises(DataError):
            dg.global_balance([hmhd.preset(grid8, "zero")], "hmhd-energy")


class TestSuitability:
    def test_smooth_regularized_run_passes(self, grid16):
        s = hmhd.preset(grid16, "random", seed=1, amplitude=0.02, kmax=2, eps=4 * grid16.h)
        rep = dg.suitability_monitor(hmhd.run(s, 0.1, dt=0.005))
        assert rep.regularized and rep.passed
        for e in rep.entries:
            assert abs(e.measured - e.formula) <= 1e-3 * e.scale

    def test_under_resolved_run_is_flagged(self, grid16):
        s = hmhd.preset(grid16, "random", seed=1, amplitude=5.0, kmax=8)
        rep = dg.suitability_monitor(hmhd.run(s, 0.2, dealias=False))
        assert not rep.regularized and rep.flagged

    def test_needs_three_samples(self, grid8):
        with pytest.raises(DataError):
            dg.suitability_monitor([hmhd.preset(grid8, "zero")] * 2)


class TestConvergenceStudy:
    def test_fit_loglog_exact(self):
        x = np.array([1.0, 2.0, 4.0, 8.0])
        slope, intercept, r2 = dg.fit_loglog(x, 3.0 * x**1.5)
        assert slope == pytest.approx(1.5, abs=1e-12)
        assert intercept == pytest.approx(math.log(3.0), abs=1e-12)
        assert r2 == pytest.approx(1.0, abs=1e-12)

    def test_too_few_points(self, grid16):
        with pytest.raises(DataError):
            dg.convergence_study(hmhd.preset(grid16, "zero"), "hmhd-energy", [4 * grid16.h, 8 * grid16.h])

    def test_exact_zero_sentinel(self, grid16):
        h = grid16.h
        rec = dg.convergence_study(hmhd.preset(grid16, "zero"), "hmhd-energy", [3 * h, 4 * h, 8 * h])
        assert rec.exact_zero and rec.slope == dg.EXACT_ZERO
