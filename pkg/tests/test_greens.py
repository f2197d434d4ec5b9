import numpy as np
import pytest

import kdvlab as kl
from kdvlab import (
    DenseOperator,
    build_lax_resolvent,
    current_j,
    dg_directional,
    drho_directional,
    greens_diagonal_direct,
    greens_diagonal_series,
    h1_field,
    make_grid,
    microlaw_residual,
    rho_alpha,
)
from kdvlab.errors import (
    NearSingularOperator,
    NegativeDensity,
    NoConvergence,
    SeriesNotContracting,
)
from kdvlab.greens import LaxResolvent, contraction_parameter
from kdvlab.grid import RealField, field_from_function, zero_field
from kdvlab.spectral import l2_norm, r0_2kappa, sobolev_kappa_norm
from kdvlab.tails import tail_moments


def grid50():
    return make_grid(50.0, 512)


def periodized_exp_kernel(grid, kappa):
    z = grid.x[:, None] - grid.x[None, :]
    z = np.abs((z + grid.length / 2) % grid.length - grid.length / 2)
    return np.cosh(kappa * (grid.length / 2 - z)) / (
        2 * kappa * np.sinh(kappa * grid.length / 2)
    )


class TestResolvent:
    def test_free_kernel(self):
        g = grid50()
        op = build_lax_resolvent(zero_field(g), 1.0)
        assert np.abs(op.kernel - periodized_exp_kernel(g, 1.0)).max() < 1e-10

    def test_constant_potential_diagonal(self):
        g = grid50()
        u = RealField(g, np.full(g.points, 3.0))
        op = build_lax_resolvent(u, 1.0)
        # shift kappa^2 -> kappa^2 + c in the free kernel: diag 1/(2*2)
        assert np.abs(op.diagonal().samples - 0.25).max() < 1e-10

    def test_near_singular(self):
        # constant u = -kappa^2 - 1 zeroes the xi = +-1 modes on a 2pi box
        g = make_grid(2 * np.pi, 32)
        u = RealField(g, np.full(g.points, -2.0))
        with pytest.raises(NearSingularOperator):
            build_lax_resolvent(u, 1.0)

    def test_symmetry(self):
        g = grid50()
        u = kl.initial_data.gaussian_bump(g, 0.5, 2.0)
        op = build_lax_resolvent(u, 2.0)
        assert op.symmetry_gap() < 1e-8

    def test_galerkin_resolvent_identity(self):
        # R_u - R_0 = -R_0 u R_u holds exactly on the band-limited kernels
        g = grid50()
        u = kl.initial_data.gaussian_bump(g, 0.4, 3.0)
        ru = LaxResolvent(u, 2.0).galerkin_operator()
        r0 = LaxResolvent(zero_field(g), 2.0).galerkin_operator()
        mu = DenseOperator(g, np.diag(u.samples) / g.dx)
        lhs = ru.kernel - r0.kernel
        rhs = -(r0.compose(mu).compose(ru)).kernel
        rel = np.linalg.norm(lhs - rhs, "fro") / np.linalg.norm(lhs, "fro")
        assert rel < 1e-8


class TestDiagonalGreen:
    def test_free(self):
        g = grid50()
        gg = greens_diagonal_direct(zero_field(g), 2.0)
        assert np.abs(gg.samples - 0.25).max() < 1e-8

    def test_constant_closed_form(self):
        g = grid50()
        u = RealField(g, np.ones(g.points))
        gg = greens_diagonal_direct(u, 2.0)
        assert np.abs(gg.samples - 1 / (2 * np.sqrt(5))).max() < 1e-6

    def test_series_matches_direct(self):
        g = grid50()
        u = kl.initial_data.gaussian_bump(g, 0.4, 3.0)
        gd = greens_diagonal_direct(u, 3.0)
        gs, terms = greens_diagonal_series(u, 3.0, tol=1e-12)
        assert np.abs(gd.samples - gs.samples).max() < 1e-8
        assert terms > 1

    def test_series_constant(self):
        # small box keeps the contraction parameter under 1/2 for u = 1
        g = make_grid(2 * np.pi, 64)
        u = RealField(g, np.ones(g.points))
        assert contraction_parameter(u, 2.0) <= 0.5
        gs, _ = greens_diagonal_series(u, 2.0, tol=1e-12)
        gd = greens_diagonal_direct(u, 2.0)
        assert np.abs(gs.samples - gd.samples).max() < 1e-8

    def test_series_zero_field(self):
        g = grid50()
        gs, terms = greens_diagonal_series(zero_field(g), 2.0)
        assert np.abs(gs.samples - 0.25).max() < 1e-10
        assert terms == 1  # one vanishing potential term is evaluated

    def test_series_not_contracting(self):
        g = grid50()
        # constant c tuned so kappa^{-1/2}||u||_{H^-1_k} = 0.9
        kappa = 1.0
        c = 0.9 * np.sqrt(kappa) * 2 * kappa / np.sqrt(g.length)
        u = RealField(g, np.full(g.points, c))
        assert contraction_parameter(u, kappa) == pytest.approx(0.9, rel=1e-12)
        with pytest.raises(SeriesNotContracting):
            greens_diagonal_series(u, kappa)

    def test_series_no_convergence(self):
        g = grid50()
        u = kl.initial_data.gaussian_bump(g, 0.4, 3.0)
        with pytest.raises(NoConvergence):
            greens_diagonal_series(u, 3.0, l_max=2, tol=1e-14)


class TestH1Field:
    def test_constant(self):
        g = grid50()
        out = h1_field(RealField(g, np.ones(g.points)), 1.0)
        assert np.abs(out.samples + 0.25).max() < 1e-13

    def test_cos(self):
        g = make_grid(2 * np.pi, 64)
        out = h1_field(field_from_function(g, np.cos), 1.0)
        assert np.abs(out.samples + np.cos(g.x) / 5).max() < 1e-13

    def test_matches_dense_series_term(self):
        g = grid50()
        kappa = 2.0
        rng = np.random.default_rng(11)
        hat = np.zeros(g.points, complex)
        hat[1:60] = (rng.standard_normal(59) + 1j * rng.standard_normal(59)) / 60
        hat[-59:] = np.conj(hat[59:0:-1])
        u = RealField(g, np.fft.ifft(hat).real)
        # independent dense construction of -(R0 u R0) diagonal + repair
        col = np.fft.ifft(g.xi**2 + kappa**2).real
        idx = (np.arange(g.points)[:, None] - np.arange(g.points)[None, :]) % g.points
        m0inv = np.linalg.inv(col[idx])
        dense = -np.diag(m0inv @ (u.samples[:, None] * m0inv)) / g.dx
        from kdvlab.tails import pair_deficit_symbol

        dense = dense - np.fft.ifft(
            pair_deficit_symbol(g, kappa) * np.fft.fft(u.samples)
        ).real
        assert np.abs(h1_field(u, kappa).samples - dense).max() < 1e-9


class TestRhoAlpha:
    def test_zero_field(self):
        g = grid50()
        gd = rho_alpha(zero_field(g), 2.0)
        assert np.abs(gd.rho.samples).max() < 1e-12
        assert abs(gd.alpha) < 1e-10

    def test_constant_closed_form(self):
        g = grid50()
        gd = rho_alpha(RealField(g, np.ones(g.points)), 2.0)
        rho_exact = 2.0 + 1.0 / 4.0 - np.sqrt(5.0)
        assert np.abs(gd.rho.samples - rho_exact).max() < 1e-10
        assert gd.alpha == pytest.approx(50.0 * rho_exact, rel=1e-9)
        assert rho_exact == pytest.approx(0.0139320, abs=1e-7)

    def test_one_over_g(self):
        g = grid50()
        gd = rho_alpha(kl.initial_data.gaussian_bump(g, 0.3, 2.0), 2.0)
        assert np.abs(gd.one_over_g.samples * gd.g.samples - 1).max() < 1e-12

    def test_two_sided_bound_random_suite(self):
        g = grid50()
        rng = np.random.default_rng(42)
        for trial in range(25):
            t = rng.uniform(0.1, 1.0)
            kappa = 1.0 + 10.0 * t * t
            u = kl.initial_data.random_bandlimited(g, kappa, t, seed=trial)
            gd = rho_alpha(u, kappa)
            nrm2 = sobolev_kappa_norm(u, -1.0, kappa) ** 2
            assert gd.alpha >= 0.25 * nrm2 / kappa - 1e-9
            assert gd.alpha <= nrm2 / kappa + 1e-9
            assert gd.rho.samples.min() >= -1e-9

    def test_negative_density_guard(self):
        # far below the admissible kappa the density check trips (or the
        # operator is flagged outright)
        g = grid50()
        u = kl.initial_data.random_bandlimited(g, 1.0, 3.0, seed=0)
        with pytest.raises((NegativeDensity, NearSingularOperator, Exception)):
            rho_alpha(u, 1.0)

    def test_series_method(self):
        g = grid50()
        u = kl.initial_data.gaussian_bump(g, 0.3, 2.0)
        gd = rho_alpha(u, 3.0, method="series")
        gdd = rho_alpha(u, 3.0, method="direct")
        assert gd.series_terms_used > 0
        assert gdd.series_terms_used == 0
        assert abs(gd.alpha - gdd.alpha) < 1e-10

    def test_save(self, tmp_path):
        g = grid50()
        gd = rho_alpha(kl.initial_data.gaussian_bump(g, 0.3, 2.0), 3.0)
        gd.save(str(tmp_path / "gd"))
        data = np.loadtxt(tmp_path / "gd.txt")
        assert data.shape == (512, 4)
        import json

        meta = json.loads((tmp_path / "gd.json").read_text())
        assert meta["kappa"] == 3.0
        assert meta["method"] == "direct"


class TestCurrent:
    def test_zero(self):
        g = grid50()
        gg = greens_diagonal_direct(zero_field(g), 2.0)
        j = current_j(zero_field(g), 2.0, gg)
        assert j.max_abs() < 1e-10

    def test_constant_closed_form(self):
        g = grid50()
        kappa = 2.0
        u = RealField(g, np.ones(g.points))
        j = current_j(u, kappa, greens_diagonal_direct(u, kappa))
        j_exact = 32.0 + (1.0 - 8.0) * 2 * np.sqrt(5.0) - 3.0 / 4.0
        assert np.abs(j.samples - j_exact).max() < 1e-9
        assert j_exact == pytest.approx(-0.05495, abs=1e-5)

    def test_soliton_decay_at_edge(self):
        g = grid50()
        u = kl.initial_data.soliton(g, 1.0)
        gd = rho_alpha(u, 3.0)
        edge = np.concatenate([gd.j.samples[:4], gd.j.samples[-4:]])
        assert np.abs(edge).max() < 1e-8


class TestDirectionalDerivatives:
    def test_dg_free_constant_direction(self):
        g = grid50()
        f = RealField(g, np.ones(g.points))
        dg = dg_directional(zero_field(g), 1.0, f)
        # free kernel identity: dg = -(1/kappa) R0(2kappa) f = -1/4 here
        assert np.abs(dg.samples + 0.25).max() < 1e-10

    def test_dg_zero_direction(self):
        g = grid50()
        u = kl.initial_data.gaussian_bump(g, 0.5, 2.0)
        dg = dg_directional(u, 2.0, zero_field(g))
        assert dg.max_abs() == 0.0

    def test_dg_finite_difference(self):
        g = grid50()
        kappa = 3.0
        u = kl.initial_data.gaussian_bump(g, 0.5, 2.0)
        f = kl.initial_data.gaussian_bump(g, 1.0, 2.0, center=30.0)
        dg = dg_directional(u, kappa, f)
        s = 1e-5
        up = RealField(g, u.samples + s * f.samples)
        um = RealField(g, u.samples - s * f.samples)
        fd = (greens_diagonal_direct(up, kappa).samples
              - greens_diagonal_direct(um, kappa).samples) / (2 * s)
        assert np.abs(dg.samples - fd).max() / np.abs(dg.samples).max() < 1e-6

    def test_drho_vanishes_at_zero(self):
        g = grid50()
        f = kl.initial_data.gaussian_bump(g, 1.0, 2.0)
        dr = drho_directional(zero_field(g), 2.0, f)
        assert dr.max_abs() < 1e-9

    def test_drho_linear(self):
        g = grid50()
        u = kl.initial_data.gaussian_bump(g, 0.4, 2.0)
        f1 = kl.initial_data.gaussian_bump(g, 0.8, 1.5, center=20.0)
        f2 = kl.initial_data.gaussian_bump(g, 0.6, 2.5, center=32.0)
        both = RealField(g, f1.samples + f2.samples)
        lhs = drho_directional(u, 3.0, both)
        rhs = drho_directional(u, 3.0, f1).samples + drho_directional(u, 3.0, f2).samples
        assert np.abs(lhs.samples - rhs).max() < 1e-12

    def test_drho_finite_difference(self):
        g = grid50()
        kappa = 3.0
        u = kl.initial_data.gaussian_bump(g, 0.5, 2.0)
        # overlap the direction with u so the derivative scale stays well
        # above the fd roundoff floor
        f = kl.initial_data.gaussian_bump(g, 1.0, 3.0, center=26.0)
        dr = drho_directional(u, kappa, f)

        def rho_of(uu):
            gg = greens_diagonal_direct(uu, kappa)
            return -1 / (2 * gg.samples) + kappa + r0_2kappa(uu, kappa).samples * 2 * kappa

        s = 1e-5
        fd = (rho_of(RealField(g, u.samples + s * f.samples))
              - rho_of(RealField(g, u.samples - s * f.samples))) / (2 * s)
        assert np.abs(dr.samples - fd).max() / np.abs(dr.samples).max() < 1e-6

    def test_gg_identity(self):
        # int G(x,y) G(y,x) / (2 g(y)^2) dy = g(x), via the dg plumbing
        g = grid50()
        u = kl.initial_data.gaussian_bump(g, 0.5, 2.0)
        res = LaxResolvent(u, 3.0)
        gg = res.diagonal_green()
        lhs = -res.dg(RealField(g, 1 / (2 * gg.samples**2)))
        rel = l2_norm(RealField(g, lhs.samples - gg.samples)) / l2_norm(gg)
        assert rel < 1e-7


class TestMicrolaw:
    def test_zero(self):
        # roundoff only: j cancels 4k^3 - 2k^2/g at O(100) scale before the
        # spectral derivative
        g = grid50()
        assert microlaw_residual(zero_field(g), 3.0) < 1e-10

    def test_gaussian(self):
        g = make_grid(50.0, 256)
        u = kl.initial_data.gaussian_bump(g, 0.5, 2.0)
        assert microlaw_residual(u, 3.0) < 1e-6

    def test_source_terms_cancel(self):
        g = make_grid(50.0, 256)
        u = kl.initial_data.gaussian_bump(g, 0.5, 2.0)
        base = microlaw_residual(u, 3.0)
        xc = g.centered()
        coeffs = kl.CoefficientSet.from_fields(
            g,
            a1=RealField(g, 0.05 / (1 + xc**2)),
            a2=RealField(g, 0.1 / (1 + xc**2)),
            a3=RealField(g, -0.07 / (1 + xc**2)),
            a4=RealField(g, 0.2 / (1 + xc**2)),
        )
        forced = microlaw_residual(u, 3.0, coeffs)
        assert abs(forced - base) < 1e-12


class TestH2Identity:
    def test_identity(self):
        g = grid50()
        kappa = 2.0
        u = kl.initial_data.gaussian_bump(g, 0.4, 3.0)
        us = u.samples
        # independent dense construction of h2 = diag((R0 u)^2 R0) + repair
        col = np.fft.ifft(g.xi**2 + kappa**2).real
        idx = (np.arange(g.points)[:, None] - np.arange(g.points)[None, :]) % g.points
        m0inv = np.linalg.inv(col[idx])
        b2 = m0inv @ (us[:, None] * (m0inv @ (us[:, None] * m0inv)))
        h2 = np.diag(b2) / g.dx + us**2 * tail_moments(g, kappa)[2]
        h1 = h1_field(u, kappa)
        from kdvlab.spectral import dealiased_product, derivative

        d = lambda f, o: derivative(f, o)
        mul = dealiased_product
        h1p = d(h1, 1)
        h1pp = d(h1, 2)
        h1sq = mul(h1, h1)
        lhs = 16 * kappa**5 * h2
        rhs = (
            3 * mul(u, u).samples
            - 3 * kappa**2 * mul(h1pp, h1pp).samples
            - 20 * kappa**4 * (mul(h1p, h1p).samples - d(h1sq, 2).samples)
            + 4


            * kappa**4
            * d(
                r0_2kappa(
                    RealField(g, mul(h1p, h1p).samples + 2 * d(h1sq, 2).samples),
                    kappa,
                ),
                2,
            ).samples
        )
        scale = l2_norm(mul(u, u))
        assert l2_norm(RealField(g, lhs - rhs)) < 1e-6 * scale
