"""Hilbert-Schmidt and weighted operator norms; kappa-scaling audits.

The scaling audits measure how commutator-type operators built from the free
resolvent and the sech(x/6) weight decay as kappa grows.  Operators are
applied matrix-free through alias-exact convolution symbols (see tails.py);
norms are estimated by power iteration on the normal equations, restricted
to the resolved frequency band so that quadrature noise near Nyquist cannot
pollute the fit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DivisionByZeroNorm, UnresolvedKernel
from .grid import RealField, TorusGrid, make_grid
from .greens import DenseOperator
from .spectral import as_kappa, fft_hat, sobolev_kappa_norm
from .tails import exact_resolvent_symbols
from .weights import periodized_sech


def hs_norm(a: DenseOperator) -> float:
    """Hilbert-Schmidt norm: dx * ||K||_F, discretizing (iint |K|^2)^(1/2)."""
    if not np.all(np.isfinite(a.kernel)):
        raise ValueError("kernel has non-finite entries")
    return float(a.grid.dx * np.linalg.norm(a.kernel, "fro"))


def operator_trace(a: DenseOperator) -> float:
    """tr A = int K(x,x) dx."""
    return float(np.trace(a.kernel) * a.grid.dx)


def operator_norm(a: DenseOperator) -> float:
    """L2 -> L2 operator norm (largest singular value of K*dx)."""
    return float(np.linalg.svd(a.kernel, compute_uv=False)[0] * a.grid.dx)


def schur_row_col_norms(a: DenseOperator) -> tuple[float, float]:
    """(L^inf -> L^inf, L^1 -> L^1) norms via kernel row/column sums."""
    row = float(np.abs(a.kernel).sum(axis=1).max() * a.grid.dx)
    col = float(np.abs(a.kernel).sum(axis=0).max() * a.grid.dx)
    return row, col


def dense_from_multiplier(mult) -> DenseOperator:
    """Dense kernel of a Fourier multiplier (its exact grid representation).

    Note the distinction: this kernel acts with the multiplier's exact
    symbol, while a kernel built from *sampled* continuum values (as the
    repaired resolvent is) acts with the aliased symbol.  Pointwise kernel
    checks want the latter; symbol-exact norms want the former.
    """
    grid = mult.grid
    kern = np.fft.ifft(
        mult.symbol[:, None] * np.fft.fft(np.eye(grid.points), axis=0), axis=0
    ).real
    return DenseOperator(grid, kern / grid.dx)


def sqrt_free_resolvent_dense(grid: TorusGrid, kappa) -> DenseOperator:
    """Dense kernel of (xi^2+kappa^2)^{-1/2} (band-limited grid symbol)."""
    k = as_kappa(kappa)
    sym = (grid.xi**2 + k**2) ** (-0.5)
    kern = np.fft.ifft(sym[:, None] * np.fft.fft(np.eye(grid.points), axis=0), axis=0).real
    return DenseOperator(grid, kern / grid.dx)


def verify_hs_identity(f: RealField, kappa) -> float:
    """Relative gap in || sqrtR0 f sqrtR0 ||_HS = kappa^{-1/2} ||f||_{H^-1_k}.

    The identity is exact on the line; on the grid the gap is the
    discretization error and should shrink like 1/N.
    """
    k = as_kappa(kappa)
    if f.max_abs() == 0.0:
        raise DivisionByZeroNorm("identity gap undefined for the zero field")
    g = f.grid
    sym = (g.xi**2 + k**2) ** (-0.5)
    msym = np.fft.ifft(sym[:, None] * np.fft.fft(np.eye(g.points), axis=0), axis=0).real
    lhs = float(np.linalg.norm(msym @ (f.samples[:, None] * msym), "fro"))
    rhs = sobolev_kappa_norm(f, -1.0, k) / np.sqrt(k)
    return abs(lhs - rhs) / rhs


@dataclass(frozen=True)
class WeightedSpace:
    """H^s_kappa viewed as weighted L^2 in Fourier."""

    s: float
    kappa: float

    def __post_init__(self):
        as_kappa(self.kappa)

    def weight_symbol(self, grid: TorusGrid) -> np.ndarray:
        return (grid.xi**2 + 4 * self.kappa**2) ** (self.s / 2)


def _power_iteration(mv, rmv, n, tol=1e-6, max_iter=1200, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for i in range(max_iter):
        w = rmv(mv(v))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        new = np.sqrt(nw)
        if i > 20 and abs(new - sigma) <= tol * new:
            return float(new)
        sigma = new
        v = w / nw
    return float(sigma)


def _largest_singular_value(mv, rmv, n, tol=1e-6, seed=0):
    """Top singular value via ARPACK (deterministic start), with a
    power-iteration fallback.  Plain power iteration stalls on the
    clustered spectra these multiplier sandwiches produce."""
    from scipy.sparse.linalg import LinearOperator, svds

    op = LinearOperator(
        (n, n),
        matvec=lambda v: np.asarray(mv(np.ravel(np.real(v))), dtype=float),
        rmatvec=lambda v: np.asarray(rmv(np.ravel(np.real(v))), dtype=float),
        dtype=float,
    )
    v0 = np.random.default_rng(seed).standard_normal(n)
    try:
        s = svds(op, k=1, tol=tol * 1e-2, v0=v0, return_singular_vectors=False)
        return float(s[0])
    except Exception:
        return _power_iteration(mv, rmv, n, tol=tol, seed=seed)


def weighted_op_norm(a: DenseOperator, from_space: WeightedSpace,
                     to_space: WeightedSpace, tol: float = 1e-6) -> float:
    """Norm of A: H^s_from -> H^s_to via power iteration on W_to A W_from^{-1}."""
    g = a.grid
    win = 1.0 / from_space.weight_symbol(g)
    wout = to_space.weight_symbol(g)
    k = a.kernel
    kt = np.ascontiguousarray(k.T)
    dx = g.dx
    F, Fi = np.fft.fft, lambda v: np.fft.ifft(v).real

    def mv(v):
        return Fi(wout * F(k @ Fi(win * F(v)) * dx))

    def rmv(v):
        return Fi(win * F(kt @ Fi(wout * F(v)) * dx))

    return _largest_singular_value(mv, rmv, g.points, tol=tol)


@dataclass(frozen=True)
class ScalingReport:
    """Log-log slope of an operator norm against kappa."""

    variant: str
    kappa_values: list[float]
    norms: list[float]
    fitted_slope: float
    slope_ci: float
    spaces: str = "L2->L2"
    weight_power: int = 1
    meta: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.slope_ci <= 0.3

    def to_json(self) -> str:
        return json.dumps(
            {
                "variant": self.variant,
                "kappas": list(self.kappa_values),
                "norms": list(self.norms),
                "slope": self.fitted_slope,
                "ci": self.slope_ci,
                "spaces": self.spaces,
                "weight_power": self.weight_power,
                "meta": self.meta,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ScalingReport":
        d = json.loads(text)
        return cls(
            variant=d["variant"],
            kappa_values=d["kappas"],
            norms=d["norms"],
            fitted_slope=d["slope"],
            slope_ci=d["ci"],
            spaces=d.get("spaces", "L2->L2"),
            weight_power=d.get("weight_power", 1),
            meta=d.get("meta", {}),
        )


def _fit_slope(kappas, norms):
    if len(kappas) < 4:
        raise ValueError("slope fits need at least 4 kappa values")
    lk, ln = np.log(kappas), np.log(norms)
    a = np.vstack([lk, np.ones_like(lk)]).T
    coef, *_ = np.linalg.lstsq(a, ln, rcond=None)
    resid = ln - a @ coef
    dof = max(len(lk) - 2, 1)
    se = np.sqrt((resid**2).sum() / dof / ((lk - lk.mean()) ** 2).sum())
    return float(coef[0]), float(2 * se)


AUDIT_VARIANTS = ("plain", "with_derivative", "double", "double_derivative")


def commutator_scaling_audit(
    weight_power: int = 1,
    variant: str = "plain",
    kappa_list=(2.0, 4.0, 8.0, 16.0),
    length: float = 100.0,
    points: int | None = None,
    band_fraction: float = 0.25,
    tol: float = 1e-6,
) -> ScalingReport:
    """Measure the kappa decay of weight/resolvent commutator norms.

    plain             || w R0 (1/w) ||_{L2->L2}            ~ kappa^-2
    with_derivative   || w dR0 (1/w) ||_{L2->L2}           ~ kappa^-1
    double            || (1/psi)(R0 psi^2 R0 -
                         psi R0^2 psi)(1/psi) ||_{H-2->H2} ~ kappa^-2
    double_derivative same with derivatives inserted,       O(1)

    w = psi^weight_power with psi the smoothly periodized sech(x/6).  The
    grid resolves e^{-kappa dx} structure (kappa*dx <= 0.5 enforced, 0.25
    targeted); norms are measured on the resolved band |xi| <=
    band_fraction * xi_max.  The double variant's interior quadrature
    carries an Euler-Maclaurin corner correction so the kappa^-2 decay is
    not floored by O(dx^2) errors.
    """
    if variant not in AUDIT_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    kappas = sorted(float(k) for k in kappa_list)
    if kappas[0] < 1.0 or kappas[-1] > 64.0:
        raise ValueError("kappa_list must lie in [1, 64]")
    if points is None:
        # kappa*dx <= 0.25 and at least 2048 points
        points = max(2048, int(2 ** np.ceil(np.log2(4 * kappas[-1] * length + 1))))
    grid = make_grid(length, points)
    if kappas[-1] * grid.dx > 0.5:
        raise UnresolvedKernel(
            f"kappa*dx = {kappas[-1] * grid.dx:.3f} > 0.5 at N = {points}"
        )
    psi = periodized_sech(grid).samples
    w = psi**weight_power
    F, Fi = np.fft.fft, lambda v: np.fft.ifft(v).real
    proj = (np.abs(grid.xi) <= band_fraction * grid.xi_max).astype(float)
    dx = grid.dx

    norms = []
    for kap in kappas:
        s0, sd, s2, sdd2 = exact_resolvent_symbols(grid, kap)
        if variant == "plain":
            mv = lambda v: proj_apply(proj, w * Fi(s0 * F(Fi(proj * F(v)) / w)))
            rmv = lambda v: proj_apply(proj, (1 / w) * Fi(s0 * F(Fi(proj * F(v)) * w)))
        elif variant == "with_derivative":
            mv = lambda v: proj_apply(proj, w * Fi(sd * F(Fi(proj * F(v)) / w)))
            rmv = lambda v: proj_apply(
                proj, (1 / w) * Fi(np.conj(sd) * F(Fi(proj * F(v)) * w))
            )
        else:
            wsob = grid.xi**2 + 4 * kap**2
            if variant == "double":
                r0 = lambda v: Fi(s0 * F(v))
                r02 = lambda v: Fi(s2 * F(v))

                def core(v):
                    a = r0(psi**2 * r0(v))
                    # corner correction for the trapezoid composition
                    a -= (dx**2 / 12.0) * (psi**2 * r0(v) + r0(psi**2 * v))
                    return a - psi * r02(psi * v)
            else:
                # Galerkin symbols: the composition has no quadrature
                # corners, and the band-limited tails are harmless against
                # this variant's O(1) target
                sd_gal = 1j * grid.xi / (grid.xi**2 + kap**2)
                sd_gal[grid.points // 2] = 0.0
                sdd2_gal = -(grid.xi**2) / (grid.xi**2 + kap**2) ** 2
                dr0 = lambda v: Fi(sd_gal * F(v))
                r02dd = lambda v: Fi(sdd2_gal * F(v))

                def core(v):
                    return dr0(psi**2 * dr0(v)) - psi * r02dd(psi * v)

            def mv(v):
                a = Fi(wsob * proj * F(v))
                return Fi(proj * wsob * F(core(a / psi) / psi))

            rmv = mv  # symmetric by construction
        norms.append(_largest_singular_value(mv, rmv, grid.points, tol=tol))

    slope, ci = _fit_slope(kappas, norms)
    spaces = "L2->L2" if variant in ("plain", "with_derivative") else "H-2k->H2k"
    return ScalingReport(
        variant=variant,
        kappa_values=kappas,
        norms=[float(v) for v in norms],
        fitted_slope=slope,
        slope_ci=ci,
        spaces=spaces,
        weight_power=weight_power,
        meta={"length": length, "points": points, "band_fraction": band_fraction},
    )


def proj_apply(proj, v):
    return np.fft.ifft(proj * np.fft.fft(v)).real


def weight_admissibility_report(grid: TorusGrid, samples: int = 400, seed: int = 0):
    """Check |psi'| + |psi''| <= psi and the e^{|x-y|/2} ratio bound on pairs."""
    psi = periodized_sech(grid)
    from .spectral import derivative

    p1 = derivative(psi, 1).samples
    p2 = derivative(psi, 2).samples
    margin = float(np.max((np.abs(p1) + np.abs(p2)) / psi.samples))
    rng = np.random.default_rng(seed)
    i = rng.integers(0, grid.points, size=samples)
    jx = rng.integers(0, grid.points, size=samples)
    d = np.abs(grid.x[i] - grid.x[jx])
    d = np.minimum(d, grid.length - d)
    ratio = psi.samples[jx] / psi.samples[i]
    excess = float(np.max(ratio / np.exp(d / 2)))
    return {"derivative_margin": margin, "ratio_excess": excess}
