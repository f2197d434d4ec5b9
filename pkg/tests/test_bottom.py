import numpy as np
import pytest

import kdvlab as kl
from kdvlab import (
    build_profile,
    hypothesis_check,
    make_grid,
    profile_from_descriptor,
    solve,
    solve_kdvvb,
    synth_coefficients,
    transform_backward,
    transform_forward,
)
from kdvlab.errors import BottomTooShallow
from kdvlab.grid import RealField, zero_field
from kdvlab.spectral import l2_norm, trig_interpolate


def sech2_profile(grid, amp=0.1, width=3.0):
    return profile_from_descriptor(
        grid, {"kind": "sech2", "amplitude": amp, "width": width}
    )


class TestProfile:
    def test_flat(self):
        g = make_grid(50.0, 256)
        p = build_profile(zero_field(g))
        assert np.allclose(p.b.samples, 1.0)
        assert np.max(np.abs(p.y_samples - g.x)) < 1e-12
        assert p.y_length == pytest.approx(50.0)

    def test_constant(self):
        g = make_grid(50.0, 256)
        p = build_profile(RealField(g, np.full(256, 0.19)))
        assert np.allclose(p.b.samples, 0.9, atol=1e-14)
        assert np.max(np.abs(p.y_samples - g.x / 0.9 ** (5 / 3))) < 1e-10

    def test_shallow_rejected(self):
        g = make_grid(50.0, 256)
        with pytest.raises(BottomTooShallow):
            build_profile(RealField(g, np.full(256, 0.95)))

    def test_y_derivative(self):
        g = make_grid(50.0, 512)
        p = sech2_profile(g, 0.1, 3.0)
        # y'(x) = (1 - c)^{-5/6}, via the spectral derivative of the map
        from kdvlab.spectral import derivative

        yper = derivative(p.y_periodic, 1).samples + p.y_slope
        expect = (1 - p.c.samples) ** (-5.0 / 6.0)
        assert np.max(np.abs(yper - expect)) < 1e-8
        assert np.all(np.diff(p.y_samples) > 0)

    def test_inverse_roundtrip(self):
        g = make_grid(50.0, 512)
        p = sech2_profile(g, 0.1, 3.0)
        x_back = p.y_inverse(p.y_samples)
        assert np.max(np.abs(x_back - g.x)) < 1e-8

    def test_descriptor(self):
        g = make_grid(50.0, 256)
        p = profile_from_descriptor(g, {"kind": "sech2", "amplitude": 0.05, "width": 3.0})
        assert p.c.samples.max() == pytest.approx(0.05, rel=1e-10)

    def test_load_from_file(self, tmp_path):
        g = make_grid(50.0, 256)
        z = g.centered()
        c = 0.05 / np.cosh(z / 3.0) ** 2
        path = tmp_path / "bottom.txt"
        np.savetxt(path, np.column_stack([g.x, c]))
        from kdvlab.bottom import load_profile

        p = load_profile(str(path), g)
        assert np.max(np.abs(p.c.samples - c)) < 1e-12


class TestCoefficients:
    def test_flat_gives_zero(self):
        g = make_grid(50.0, 256)
        coeffs = synth_coefficients(build_profile(zero_field(g)))
        for name in ("a2", "a3", "a4"):
            f = getattr(coeffs, name)(0.0)
            assert f.max_abs() < 1e-12
        assert coeffs.a1(0.0) is None

    def test_constant_bottom(self):
        g = make_grid(50.0, 256)
        c0 = 0.19
        coeffs = synth_coefficients(build_profile(RealField(g, np.full(256, c0))))
        b = np.sqrt(1 - c0)
        assert coeffs.a2(0.0).max_abs() < 1e-10
        assert coeffs.a4(0.0).max_abs() < 1e-10
        a3 = coeffs.a3(0.0)
        expect = 4 * (1 - b ** (-2.0 / 3.0))
        assert np.max(np.abs(a3.samples - expect)) < 1e-10
        rep = hypothesis_check(coeffs, mode="pointwise")
        assert rep.checks[2].nondecaying  # constant a3 cannot decay

    def test_small_bump_decays(self):
        g = make_grid(50.0, 512)
        eta = 0.01
        p = sech2_profile(g, eta, 3.0)
        coeffs = synth_coefficients(p)
        rep = hypothesis_check(coeffs, mode="pointwise")
        a2, a3, a4 = rep.checks[1], rep.checks[2], rep.checks[3]
        assert not a2.nondecaying and not a3.nondecaying
        # delta scales linearly with the bump amplitude (constant ~18 here)
        assert a2.pointwise_delta < 25 * eta
        assert a3.pointwise_delta < 25 * eta
        assert np.isfinite(a4.pointwise_delta)
        rep_half = hypothesis_check(
            synth_coefficients(sech2_profile(g, eta / 2, 3.0)), mode="pointwise"
        )
        assert rep_half.checks[1].pointwise_delta == pytest.approx(
            a2.pointwise_delta / 2, rel=2e-2
        )
        # a3 -> 0 at the box edge thanks to the constant 4 in its formula
        edge = np.abs(coeffs.a3(0.0).samples[:4]).max()
        assert edge < 1e-8


class TestTransforms:
    def test_flat_identity(self):
        g = make_grid(50.0, 256)
        p = build_profile(zero_field(g))
        v = kl.initial_data.gaussian_bump(p.y_grid, 0.4, 2.0)
        u = transform_forward(v, 0.0, p)
        assert np.max(np.abs(u.samples - v.samples)) < 1e-10

    def test_flat_shift(self):
        g = make_grid(50.0, 256)
        p = build_profile(zero_field(g))
        v = kl.initial_data.gaussian_bump(p.y_grid, 0.4, 2.0)
        u = transform_forward(v, 1.0, p)
        shifted = trig_interpolate(v, (g.x - 4.0) % 50.0)
        assert np.max(np.abs(u.samples - shifted)) < 1e-8

    def test_roundtrip(self):
        g = make_grid(50.0, 512)
        p = sech2_profile(g, 0.08, 3.0)
        v = kl.initial_data.random_bandlimited(p.y_grid, 2.0, 0.4, seed=4,
                                               cutoff_fraction=0.2)
        rt = transform_backward(transform_forward(v, 0.7, p), 0.7, p)
        err = l2_norm(RealField(p.y_grid, rt.samples - v.samples)) / l2_norm(v)
        assert err < 1e-8

    def test_norm_equivalence_under_map(self):
        g = make_grid(50.0, 512)
        p = sech2_profile(g, 0.1, 3.0)
        yprime = (1 - p.c.samples) ** (-5.0 / 6.0)
        lo, hi = np.sqrt(yprime.min()), np.sqrt(yprime.max())
        for seed in range(3):
            f = kl.initial_data.random_bandlimited(p.y_grid, 2.0, 0.5, seed=seed,
                                                   cutoff_fraction=0.15)
            comp = RealField(g, trig_interpolate(f, p.y_samples % p.y_length))
            ratio = l2_norm(f) / l2_norm(comp)
            assert lo * (1 - 1e-3) <= ratio <= hi * (1 + 1e-3)


class TestDynamicsEquivalence:
    def test_short_horizon(self):
        g = make_grid(50.0, 256)
        p = sech2_profile(g, 0.05, 3.0)
        coeffs = synth_coefficients(p)
        v0 = kl.initial_data.gaussian_bump(p.y_grid, 0.3, 2.0)
        T = 0.02
        u0 = transform_forward(v0, 0.0, p)
        traj_u = solve_kdvvb(u0, T, p, save_every=50)
        traj_v = solve(v0, T, coeffs=coeffs, save_every=50)
        u_ref = transform_forward(traj_v.final, T, p)
        err = l2_norm(RealField(g, traj_u.final.samples - u_ref.samples)) / l2_norm(u_ref)
        assert err < 1e-4

    def test_kdvvb_rhs_flat_matches_gkdv(self):
        from kdvlab.bottom import kdvvb_rhs
        from kdvlab.dynamics import gkdv_rhs

        g = make_grid(50.0, 256)
        p = build_profile(zero_field(g))
        u = kl.initial_data.gaussian_bump(g, 0.4, 2.0)
        lhs = kdvvb_rhs(u, p)
        # flat bottom: -u''' + 6uu' - 4u'
        from kdvlab.spectral import derivative

        rhs = gkdv_rhs(u, 0.0).samples - 4 * derivative(u, 1).samples
        assert np.max(np.abs(lhs.samples - rhs)) < 1e-10
