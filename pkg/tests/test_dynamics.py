import numpy as np
import pytest

import kdvlab as kl
from kdvlab import (
    CoefficientSet,
    alpha_drift,
    gkdv_rhs,
    integrated_microlaw_gap,
    l2_identity_residual,
    make_grid,
    solve,
    step,
)
from kdvlab.dynamics import default_dt
from kdvlab.errors import Diverged, KappaTooSmall
from kdvlab.grid import RealField, field_from_function, zero_field
from kdvlab.spectral import l2_norm


class TestRHS:
    def test_zero(self):
        g = make_grid(2 * np.pi, 64)
        out = gkdv_rhs(zero_field(g), 0.0, CoefficientSet.zero(g))
        assert out.max_abs() < 1e-15

    def test_cos(self):
        g = make_grid(2 * np.pi, 64)
        u = field_from_function(g, np.cos)
        out = gkdv_rhs(u, 0.0)
        expect = -np.sin(g.x) - 3 * np.sin(2 * g.x)
        assert np.abs(out.samples - expect).max() < 1e-10

    def test_cos_with_a3(self):
        g = make_grid(2 * np.pi, 64)
        u = field_from_function(g, np.cos)
        coeffs = CoefficientSet.from_fields(g, a3=RealField(g, np.ones(64)))
        out = gkdv_rhs(u, 0.0, coeffs)
        expect = -np.sin(g.x) - 3 * np.sin(2 * g.x) - np.sin(g.x)
        assert np.abs(out.samples - expect).max() < 1e-10

    def test_nonfinite_raises(self):
        g = make_grid(2 * np.pi, 64)
        bad = RealField(g, np.zeros(64))
        bad.samples[3] = np.nan
        with pytest.raises(Diverged):
            gkdv_rhs(bad, 0.0)


class TestSolve:
    def test_zero_time(self):
        g = make_grid(50.0, 128)
        u0 = kl.initial_data.gaussian_bump(g, 0.3, 2.0)
        traj = solve(u0, 0.0, dt=1e-3)
        assert len(traj.snapshots) == 1
        assert np.array_equal(traj.snapshots[0].samples, u0.samples)

    def test_soliton_transport(self):
        g = make_grid(50.0, 256)
        u0 = kl.initial_data.soliton(g, 1.0, center=15.0)
        T = 0.5
        traj = solve(u0, T, dt=5e-4)
        exact = kl.initial_data.soliton_at_time(g, T, 1.0, center=15.0)
        err = l2_norm(RealField(g, traj.final.samples - exact.samples)) / l2_norm(exact)
        assert err < 1e-4

    def test_mass_conservation(self):
        g = make_grid(50.0, 256)
        u0 = kl.initial_data.gaussian_bump(g, 0.4, 2.0)
        traj = solve(u0, 0.5, dt=1e-3)
        drift = abs(traj.records[-1].mass - traj.records[0].mass)
        assert drift <= 1e-10 * max(1.0, abs(traj.records[0].mass))

    def test_time_reversal(self):
        g = make_grid(50.0, 256)
        u0 = kl.initial_data.gaussian_bump(g, 0.4, 2.0)
        T = 0.2
        fwd = solve(u0, T, dt=2e-4)
        back = solve(fwd.final, -T, dt=2e-4)
        err = l2_norm(RealField(g, back.final.samples - u0.samples))
        assert err < 1e-6

    def test_step_matches_solve(self):
        g = make_grid(50.0, 128)
        u0 = kl.initial_data.gaussian_bump(g, 0.3, 2.0)
        one = step(u0, 0.0, 1e-3)
        traj = solve(u0, 1e-3, dt=1e-3, save_every=1)
        assert np.abs(one.samples - traj.final.samples).max() < 1e-14

    def test_divergence_detected(self):
        g = make_grid(50.0, 128)
        u0 = kl.initial_data.gaussian_bump(g, 2.0, 2.0)
        with pytest.raises(Diverged) as info:
            solve(u0, 5.0, dt=0.5)  # far beyond the explicit stability range
        assert info.value.t is not None

    def test_default_dt(self):
        g = make_grid(50.0, 512)
        assert default_dt(g) == pytest.approx(0.4 / g.xi_max**3)


class TestTrajectoryIO:
    def test_save_load_roundtrip(self, tmp_path):
        g = make_grid(50.0, 128)
        u0 = kl.initial_data.gaussian_bump(g, 0.3, 2.0)
        traj = solve(u0, 0.01, dt=1e-3, kappa_list=(3.0,))
        prefix = str(tmp_path / "run")
        traj.save(prefix)
        back = kl.Trajectory.load(prefix)
        assert back.grid == g
        assert np.allclose(back.final.samples, traj.final.samples)
        assert back.records[-1].alpha[3.0] == pytest.approx(
            traj.records[-1].alpha[3.0]
        )

    def test_csv_snapshots_deterministic(self, tmp_path):
        g = make_grid(50.0, 128)
        u0 = kl.initial_data.random_bandlimited(g, 2.0, 0.3, seed=9)
        a = solve(u0, 0.01, dt=1e-3)
        b = solve(u0, 0.01, dt=1e-3)
        a.save(str(tmp_path / "a"), snapshots_as="csv")
        b.save(str(tmp_path / "b"), snapshots_as="csv")
        assert (tmp_path / "a_snapshots.csv").read_bytes() == (
            tmp_path / "b_snapshots.csv"
        ).read_bytes()


class TestL2Identity:
    def test_pure_kdv(self):
        g = make_grid(50.0, 256)
        u0 = kl.initial_data.gaussian_bump(g, 0.3, 2.0)
        traj = solve(u0, 0.02, dt=1e-5, save_every=100)
        resid = l2_identity_residual(traj, CoefficientSet.zero(g))
        assert np.max(resid) < 1e-8

    def test_two_snapshots_error(self):
        g = make_grid(50.0, 128)
        u0 = kl.initial_data.gaussian_bump(g, 0.3, 2.0)
        traj = solve(u0, 1e-3, dt=1e-3, save_every=1)
        assert len(traj.snapshots) == 2
        with pytest.raises(ValueError):
            l2_identity_residual(traj, None)

    def test_forced_a4(self):
        g = make_grid(50.0, 256)
        u0 = kl.initial_data.gaussian_bump(g, 0.2, 2.0)
        coeffs = CoefficientSet.from_fields(g, a4=RealField(g, np.ones(256)))
        dt = 1e-5
        traj = solve(u0, 0.02, dt=dt, coeffs=coeffs, save_every=100)
        resid = l2_identity_residual(traj, coeffs)
        assert np.max(resid) < 1e-4


class TestAlphaDrift:
    def test_zero_solution(self):
        g = make_grid(50.0, 128)
        traj = solve(zero_field(g), 0.01, dt=1e-3)
        drift = alpha_drift(traj, 3.0)
        assert np.max(drift) == 0.0

    def test_small_data_conserved(self):
        g = make_grid(50.0, 256)
        u0 = kl.initial_data.gaussian_bump(g, 0.25, 2.0)
        traj = solve(u0, 0.02, dt=None, save_every=200)
        drift = alpha_drift(traj, 3.0)
        assert np.max(drift) < 1e-6

    def test_refinement_decreases_drift(self):
        g1 = make_grid(50.0, 128)
        g2 = make_grid(50.0, 256)
        coarse = solve(kl.initial_data.gaussian_bump(g1, 0.25, 2.0), 0.02,
                       dt=4e-4, save_every=10)
        fine = solve(kl.initial_data.gaussian_bump(g2, 0.25, 2.0), 0.02,
                     dt=1e-4, save_every=40)
        assert np.max(alpha_drift(fine, 3.0)) <= np.max(alpha_drift(coarse, 3.0))

    def test_admissibility_guard(self):
        g = make_grid(50.0, 128)
        u0 = kl.initial_data.gaussian_bump(g, 1.5, 3.0)
        traj = solve(u0, 1e-3, dt=1e-3, save_every=1)
        with pytest.raises(KappaTooSmall) as info:
            alpha_drift(traj, 1.0)
        assert info.value.t is not None

    def test_forced_drift_matches_microlaw_integral(self):
        # with a4 on, alpha moves; the integrated source term accounts for it
        g = make_grid(50.0, 256)
        xc = g.centered()
        coeffs = CoefficientSet.from_fields(
            g, a4=RealField(g, 0.5 / (1 + xc**2)),
            metadata={"kind": "lorentzian"},
        )
        u0 = kl.initial_data.gaussian_bump(g, 0.25, 2.0)
        traj = solve(u0, 0.02, dt=None, coeffs=coeffs, save_every=150)
        kappa = 3.0
        drift = alpha_drift(traj, kappa)
        assert np.max(drift) > 1e-5  # alpha is genuinely moving
        gap, alpha0 = integrated_microlaw_gap(traj, kappa, coeffs)
        assert gap <= 1e-4 * max(alpha0, 1e-10)
