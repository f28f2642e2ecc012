import numpy as np
import pytest

from hallflux import fields, mll
from hallflux.errors import BlowUpError, ComparisonError, DataError, ParameterError, StabilityError
from hallflux.fields import Grid, cross, dot
from hallflux.timestepping import Trajectory


class TestGilbertSolve:
    def test_closed_forms(self):
        m = np.array([0.0, 0.0, 1.0])
        g = np.array([1.0, 0.0, 0.0])
        assert mll.gilbert_solve(m, g, "plus").tolist() == [0.5, -0.5, 0.0]
        assert mll.gilbert_solve(m, g, "minus").tolist() == [0.5, 0.5, 0.0]

    def test_zero_moment_is_identity(self):
        g = np.array([0.3, -1.2, 2.0])
        assert np.array_equal(mll.gilbert_solve(np.zeros(3), g), g)

    @pytest.mark.parametrize("sign,s", [("plus", 1.0), ("minus", -1.0)])
    def test_random_residual(self, sign, s):
        rng = np.random.default_rng(42)
        m = rng.standard_normal((3, 10_000))
        m *= rng.random(10_000) / np.linalg.norm(m, axis=0)
        g = rng.standard_normal((3, 10_000))
        x = mll.gilbert_solve(m, g, sign)
        residual = x + s * cross(m, x) - g
        assert np.max(np.abs(residual)) <= 1e-13

    def test_bad_sign(self):
        with pytest.raises(ParameterError):
            mll.gilbert_solve(np.zeros(3), np.ones(3), "both")


class TestRhs:
    def test_equilibrium(self, grid8):
        for scheme, eps in (("strong", None), ("penalized", 0.1)):
            s = mll.preset(grid8, "uniform", scheme=scheme, eps_pen=eps)
            for d in mll.rhs_mll(s):
                assert np.max(np.abs(d)) == 0.0

    def test_aligned_field(self, grid8):
        s = mll.preset(grid8, "uniform")
        s = s.replace(H=s.m.copy())
        assert np.max(np.abs(mll.rhs_mll(s)[0])) == 0.0

    def test_penalty_inactive_on_unit_vectors(self, grid16):
        s = mll.preset(grid16, "perturbed", seed=2, scheme="penalized", eps_pen=1e-3)
        a = mll.rhs_mll(s)[0]
        b = mll.rhs_mll(s.replace(eps_pen=1.0))[0]
        assert np.max(np.abs(a - b)) <= 1e-9 * np.max(np.abs(a))

    def test_strong_rate_is_tangent(self, grid16):
        s = mll.preset(grid16, "perturbed", seed=5, amplitude=0.5, field_amplitude=0.5)
        dm, _, _ = mll.rhs_mll(s)
        assert np.max(np.abs(dot(s.m, dm))) <= 1e-10

    def test_strong_form_matches_landau_lifshitz(self, grid16):
        s = mll.preset(grid16, "perturbed", seed=6, amplitude=0.4)
        h = fields.laplacian(grid16, s.m) + s.H
        expected = cross(s.m, h) - cross(s.m, cross(s.m, h))
        assert np.max(np.abs(mll.rhs_mll(s)[0] - expected)) <= 1e-10

    def test_maxwell_part(self, grid16):
        s = mll.preset(grid16, "perturbed", seed=7, field_amplitude=0.7)
        dm, dE, dH = mll.rhs_mll(s)
        assert np.max(np.abs(dE - fields.curl(grid16, s.H))) <= 1e-12
        assert np.max(np.abs(dH + fields.curl(grid16, s.E) + dm)) <= 1e-12

    def test_strong_energy_rate_equals_minus_dissipation(self, grid16):
        """Chain rule: dE/dt = -2 int (lap m + H).dm/dt = -int |dm/dt|^2 for |m| = 1."""
        s = mll.preset(grid16, "perturbed", seed=8, amplitude=0.3, kmax=1.5, field_amplitude=0.4)
        dm, dE, dH = mll.rhs_mll(s)
        lap = fields.laplacian(grid16, s.m)
        rate = -2 * fields.inner_product(grid16, lap, dm) + 2 * fields.inner_product(
            grid16, s.E, dE
        ) + 2 * fields.inner_product(grid16, s.H, dH)
        diss = fields.inner_product(grid16, dm, dm)
        assert abs(rate + diss) <= 1e-10 * diss

    def test_scheme_validation(self, grid8):
        z = grid8.zeros()
        with pytest.raises(ParameterError):
            mll.MllState(grid8, 0.0, z, z, z, "penalized")
        with pytest.raises(ParameterError):
            mll.MllState(grid8, 0.0, z, z, z, "implicit")


class TestStep:
    def test_equilibrium_unchanged(self, grid16):
        s = mll.preset(grid16, "uniform")
        out = mll.step(s)
        for name in ("m", "E", "H"):
            assert np.max(np.abs(getattr(out, name) - getattr(s, name))) <= 1e-12
        assert out.t == pytest.approx(mll.stable_dt(s))

    def test_penalized_maximum_principle(self, grid32):
        s = mll.preset(grid32, "perturbed", seed=1, scheme="penalized", eps_pen=1e-2)
        worst = 0.0
        for state in mll.simulate(s, 100 * mll.stable_dt(s)):
            c = state.constraints()
            worst = max(worst, c["max_m"])
            assert c["div_E"] <= 1e-8 and c["div_H_plus_m"] <= 1e-8
        assert worst <= 1 + 1e-6

    def test_strong_constraints(self, grid16):
        s = mll.preset(grid16, "perturbed", seed=4, amplitude=0.4, field_amplitude=0.4)
        final = mll.run(s, 0.05, sample_every=1000)[-1]
        c = final.constraints()
        assert c["unit_defect"] <= 1e-6
        assert c["div_E"] <= 1e-8 and c["div_H_plus_m"] <= 1e-8

    def test_self_convergence(self, grid16):
        s = mll.preset(grid16, "perturbed", seed=3, scheme="penalized", eps_pen=0.1, amplitude=0.3, field_amplitude=0.5)
        dts = (0.02, 0.01, 0.005)
        ref = mll.run(s, 0.2, dt=0.0025, sample_every=10**6)[-1]
        errs = [np.max(np.abs(mll.run(s, 0.2, dt=dt, sample_every=10**6)[-1].m - ref.m)) for dt in dts]
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders >= 2.0)

    def test_stability_bound_enforced(self, grid16):
        s = mll.preset(grid16, "perturbed")
        with pytest.raises(StabilityError):
            mll.step(s, 2 * mll.stable_dt(s))

    def test_blow_up_reported_with_time(self, grid16):
        s = mll.preset(grid16, "perturbed", seed=2, scheme="penalized", eps_pen=1e-3, amplitude=0.9)
        with pytest.raises(BlowUpError) as info:
            with np.errstate(all="ignore"):
                for _ in range(50):
                    s = mll.step(s, 1.0, check_stability=False)
        assert info.value.t > 0


class TestEnergyReport:
    def test_zero_state(self, grid8):
        s = mll.preset(grid8, "zero", scheme="penalized", eps_pen=0.1)
        rep = mll.energy_report(mll.run(s, 0.02))
        assert np.all(rep.density == 0) and np.all(rep.dissipation == 0) and np.all(rep.residual == 0)

    def test_equilibrium(self, grid8):
        rep = mll.energy_report(mll.run(mll.preset(grid8, "uniform"), 0.02))
        assert np.all(rep.dissipation == 0)
        assert np.max(np.abs(rep.residual)) == 0.0

    def test_needs_two_samples(self, grid8):
        with pytest.raises(DataError):
            mll.energy_report(Trajectory(grid8, "mll", [mll.preset(grid8, "uniform")]))

    def test_smooth_penalized_run(self, grid32):
        s = mll.preset(grid32, "perturbed", seed=1, scheme="penalized", eps_pen=1e-2)
        rep = mll.energy_report(mll.run(s, 0.1))
        assert rep.residual[0] == 0.0
        assert abs(rep.final_residual) <= 1e-3 * rep.density[0]
        assert abs(rep.extras["penalty_residual"][-1]) <= 1e-5 * rep.density[0]
        assert rep.extras["max_m"].max() <= 1 + 1e-6

    def test_strong_run_balance(self, grid16):
        s = mll.preset(grid16, "perturbed", seed=9, amplitude=0.3)
        rep = mll.energy_report(mll.run(s, 0.05))
        assert abs(rep.final_residual) <= 1e-4 * rep.density[0]
        assert np.all(np.diff(rep.density) <= 0)


class TestGap:
    def test_identical_runs(self, grid8):
        tr = mll.run(mll.preset(grid8, "perturbed"), 0.01)
        gap = mll.weak_strong_gap_mll(tr, tr)
        assert np.all(gap.values == 0)

    def test_mismatches(self, grid8):
        a = mll.run(mll.preset(grid8, "perturbed", seed=1), 0.01)
        b = mll.run(mll.preset(grid8, "perturbed", seed=2), 0.01)
        with pytest.raises(ComparisonError, match="initial data"):
            mll.weak_strong_gap_mll(a, b)
        c = mll.run(mll.preset(grid8, "perturbed", seed=1), 0.02)
        with pytest.raises(ComparisonError, match="times"):
            mll.weak_strong_gap_mll(a, c)
        d = mll.run(mll.preset(Grid(16), "perturbed", seed=1), 0.01)
        with pytest.raises(ComparisonError, match="grid"):
            mll.weak_strong_gap_mll(a, d)

    def test_penalized_halving(self, grid16):
        base = mll.preset(grid16, "perturbed", seed=3)
        dt = 2.5e-3
        ref = mll.run(base, 0.05, dt=dt)
        gaps = [
            mll.weak_strong_gap_mll(mll.run(base.replace(scheme="penalized", eps_pen=e), 0.05, dt=dt), ref).terminal
            for e in (0.1, 0.05)
        ]
        assert gaps[1] < gaps[0]
