"""Pseudospectral time integration of the generalized KdV flow

    du/dt = -u''' + 6 u u' + (a1 u')' + a2 u^2 + a3 u' + a4 u

with time-dependent coefficient fields a1..a4, plus conservation monitors.

The integrator is integrating-factor RK4 (cf. Kassam & Trefethen, SISC 2005
for the stiff-PDE context): the dispersive symbol i*xi^3 is rotated out
exactly, the remaining terms are advanced explicitly at the RK substeps with
coefficients sampled at substep times.  The quadratic term is written as
3 (u^2)' so the zero mode (mass) is conserved identically; products are
dealiased by zero padding.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import Diverged, KappaTooSmall, NonUniformSaveInterval
from .grid import RealField, TorusGrid
from .spectral import (
    as_kappa,
    dealiased_product,
    dealiased_square,
    derivative,
    integral_of_product,
    sobolev_kappa_norm,
)
from . import greens

DT_CAP_CONSTANT = 0.4  # dt <= 0.4 / xi_max^3
MAX_AMPLITUDE = 1e6
MIN_RECORDS = 200

Sampler = Callable[[float], Optional[RealField]]


@dataclass
class CoefficientSet:
    """The four gKdV coefficients as samplers t -> RealField (None = zero).

    a1 must be smooth enough for a spectral x-derivative; a3's derivative is
    also taken spectrally by the L^2 identity monitor.
    """

    grid: TorusGrid
    a1_sampler: Optional[Sampler] = None
    a2_sampler: Optional[Sampler] = None
    a3_sampler: Optional[Sampler] = None
    a4_sampler: Optional[Sampler] = None
    metadata: dict = field(default_factory=dict)

    @classmethod
    def zero(cls, grid: TorusGrid) -> "CoefficientSet":
        return cls(grid, metadata={"kind": "zero"})

    @classmethod
    def from_fields(cls, grid: TorusGrid, a1=None, a2=None, a3=None, a4=None,
                    metadata=None) -> "CoefficientSet":
        """Time-independent coefficients given as RealFields."""
        def const(f):
            return None if f is None else (lambda t, _f=f: _f)
        return cls(
            grid,
            const(a1), const(a2), const(a3), const(a4),
            metadata=dict(metadata or {}, time_dependent=False),
        )

    def _sample(self, sampler: Optional[Sampler], t: float) -> Optional[RealField]:
        if sampler is None:
            return None
        f = sampler(t)
        if f is not None and f.grid != self.grid:
            raise ValueError("coefficient sampler returned a field on the wrong grid")
        return f

    def a1(self, t: float):
        return self._sample(self.a1_sampler, t)

    def a2(self, t: float):
        return self._sample(self.a2_sampler, t)

    def a3(self, t: float):
        return self._sample(self.a3_sampler, t)

    def a4(self, t: float):
        return self._sample(self.a4_sampler, t)

    @property
    def is_zero(self) -> bool:
        return all(
            s is None
            for s in (self.a1_sampler, self.a2_sampler, self.a3_sampler, self.a4_sampler)
        )

    def descriptor(self) -> dict:
        return dict(self.metadata) if self.metadata else {"kind": "custom"}


def default_dt(grid: TorusGrid) -> float:
    """CFL-like cap 0.4 / xi_max^3 for the explicit nonlinear terms."""
    return DT_CAP_CONSTANT / grid.xi_max**3


def gkdv_rhs(u: RealField, t: float, coeffs: CoefficientSet | None = None) -> RealField:
    """-u''' + 6 u u' + (a1 u')' + a2 u^2 + a3 u' + a4 u, dealiased."""
    if not u.is_finite():
        raise Diverged("non-finite state passed to gkdv_rhs", t=t)
    vals = -derivative(u, 3).samples + 3 * derivative(dealiased_square(u), 1).samples
    if coeffs is not None and not coeffs.is_zero:
        vals = vals + greens.gkdv_source(u, coeffs, t).samples
    return RealField(u.grid, vals)


def _nonlinear_hat(grid: TorusGrid, coeffs: CoefficientSet | None):
    """hat-space callback for everything except the -u''' symbol."""
    n = grid.points
    d1 = (1j * grid.xi).copy()
    d1[n // 2] = 0.0

    def pad(vh):
        out = np.zeros(2 * n, dtype=complex)
        out[: n // 2] = vh[: n // 2]
        out[-(n // 2):] = vh[-(n // 2):]
        return out * 2

    def trunc(vh):
        out = np.zeros(n, dtype=complex)
        out[: n // 2] = vh[: n // 2]
        out[-(n // 2):] = vh[-(n // 2):]
        return out / 2

    zero = coeffs is None or coeffs.is_zero

    def nl(vh, t):
        up = np.fft.ifft(pad(vh)).real
        sq = np.fft.fft(up * up)
        out = 3 * d1 * trunc(sq)
        if not zero:
            u = RealField(grid, np.fft.ifft(vh).real)
            out = out + np.fft.fft(greens.gkdv_source(u, coeffs, t).samples)
        return out

    return nl


def ifrk4_solve(
    u0: RealField,
    T: float,
    dt: float | None,
    linear_symbol: np.ndarray,
    nonlinear_hat,
    save_every: int | None = None,
    record_fn=None,
    t0: float = 0.0,
):
    """Generic integrating-factor RK4 driver in hat space.

    Returns (times, snapshots, records).  T < 0 integrates backward.
    Raises Diverged (with the offending time) after recording the blow-up.
    """
    grid = u0.grid
    if dt is None:
        dt = default_dt(grid)
    nsteps = max(1, int(np.ceil(abs(T) / dt - 1e-9))) if T != 0 else 0
    if save_every is None:
        save_every = max(1, nsteps // MIN_RECORDS)
    if nsteps:
        # land on a uniform save grid (records must be equispaced)
        nsteps = save_every * int(np.ceil(nsteps / save_every))
    h = (T / nsteps) if nsteps else 0.0
    e_full = np.exp(linear_symbol * h)
    e_half = np.exp(linear_symbol * h / 2)
    v = np.fft.fft(u0.samples)
    times = [t0]
    snaps = [RealField(grid, u0.samples.copy())]
    records = [record_fn(t0, snaps[0])] if record_fn else []
    t = t0
    for step_i in range(1, nsteps + 1):
        s1 = nonlinear_hat(v, t)
        s2 = nonlinear_hat(e_half * (v + (h / 2) * s1), t + h / 2)
        s3 = nonlinear_hat(e_half * v + (h / 2) * s2, t + h / 2)
        s4 = nonlinear_hat(e_full * v + h * e_half * s3, t + h)
        v = e_full * v + (h / 6) * (e_full * s1 + 2 * e_half * (s2 + s3) + s4)
        t = t0 + step_i * h
        if step_i % save_every == 0 or step_i == nsteps:
            u = RealField(grid, np.fft.ifft(v).real)
            times.append(t)
            snaps.append(u)
            bad = (not u.is_finite()) or u.max_abs() > MAX_AMPLITUDE
            if record_fn:
                records.append(record_fn(t, u, diverged=bad))
            if bad:
                raise Diverged(f"|u| blew up at t = {t:.6g}", t=t)
    return np.array(times), snaps, records


@dataclass(frozen=True)
class DiagnosticRecord:
    """Conserved-quantity monitors at one saved time."""

    t: float
    mass: float
    momentum: float
    alpha: dict
    h1k_norm: dict
    max_abs: float
    diverged: bool = False


def _make_record(u: RealField, t: float, kappa_list, diverged=False) -> DiagnosticRecord:
    mass = float(np.sum(u.samples) * u.grid.dx)
    momentum = 0.5 * integral_of_product(u, u)
    alphas, h1ks = {}, {}
    if not diverged:
        for k in kappa_list:
            kf = as_kappa(k)
            h1ks[kf] = sobolev_kappa_norm(u, -1.0, kf)
            alphas[kf] = greens.rho_alpha(u, kf).alpha
    return DiagnosticRecord(
        t=t, mass=mass, momentum=momentum, alpha=alphas, h1k_norm=h1ks,
        max_abs=u.max_abs(), diverged=diverged,
    )


@dataclass
class Trajectory:
    """Time-ordered snapshots of a solution plus per-save diagnostics."""

    grid: TorusGrid
    times: np.ndarray
    snapshots: list
    records: list
    dt: float
    coeff_descriptor: dict = field(default_factory=dict)
    kappa_list: tuple = ()

    def __post_init__(self):
        if len(self.times) != len(self.snapshots):
            raise ValueError("snapshot count != time count")
        if np.any(np.diff(self.times) <= 0) and np.any(np.diff(self.times) >= 0):
            if len(self.times) > 1 and not (
                np.all(np.diff(self.times) > 0) or np.all(np.diff(self.times) < 0)
            ):
                raise ValueError("times must be strictly monotone")

    @property
    def save_interval(self) -> float:
        gaps = np.diff(self.times)
        if len(gaps) == 0:
            return 0.0
        if np.max(np.abs(gaps - gaps[0])) > 1e-9 * max(abs(gaps[0]), 1e-30):
            raise NonUniformSaveInterval("snapshots are not equispaced")
        return float(gaps[0])

    @property
    def final(self) -> RealField:
        return self.snapshots[-1]

    def save(self, path_prefix: str, snapshots_as: str = "npy"):
        header = {
            "L": self.grid.length,
            "N": self.grid.points,
            "dt": self.dt,
            "T": float(self.times[-1]),
            "kappa_list": list(self.kappa_list),
            "coeff_descriptor": self.coeff_descriptor,
            "snapshots_as": snapshots_as,
        }
        with open(f"{path_prefix}_header.json", "w") as fh:
            json.dump(header, fh, indent=1, sort_keys=True)
        arr = np.array([s.samples for s in self.snapshots])
        if snapshots_as == "npy":
            np.save(f"{path_prefix}_snapshots.npy", arr)
        else:
            np.savetxt(f"{path_prefix}_snapshots.csv", arr, delimiter=",", fmt="%.17g")
        with open(f"{path_prefix}_diagnostics.csv", "w") as fh:
            kl = list(self.kappa_list)
            cols = ["t", "mass", "momentum"]
            cols += [f"alpha_{k:g}" for k in kl]
            cols += [f"h1k_norm_{k:g}" for k in kl]
            cols += ["max_abs", "diverged"]
            fh.write(",".join(cols) + "\n")
            for r in self.records:
                row = [f"{r.t:.17g}", f"{r.mass:.17g}", f"{r.momentum:.17g}"]
                row += [f"{r.alpha.get(float(k), float('nan')):.17g}" for k in kl]
                row += [f"{r.h1k_norm.get(float(k), float('nan')):.17g}" for k in kl]
                row += [f"{r.max_abs:.17g}", str(int(r.diverged))]
                fh.write(",".join(row) + "\n")

    @classmethod
    def load(cls, path_prefix: str) -> "Trajectory":
        with open(f"{path_prefix}_header.json") as fh:
            header = json.load(fh)
        from .grid import make_grid

        grid = make_grid(header["L"], header["N"])
        if header.get("snapshots_as", "npy") == "npy":
            arr = np.load(f"{path_prefix}_snapshots.npy")
        else:
            arr = np.loadtxt(f"{path_prefix}_snapshots.csv", delimiter=",", ndmin=2)
        snaps = [RealField(grid, row) for row in arr]
        import csv

        records = []
        times = []
        kl = [float(k) for k in header["kappa_list"]]
        with open(f"{path_prefix}_diagnostics.csv") as fh:
            for row in csv.DictReader(fh):
                t = float(row["t"])
                times.append(t)
                records.append(
                    DiagnosticRecord(
                        t=t,
                        mass=float(row["mass"]),
                        momentum=float(row["momentum"]),
                        alpha={k: float(row[f"alpha_{k:g}"]) for k in kl},
                        h1k_norm={k: float(row[f"h1k_norm_{k:g}"]) for k in kl},
                        max_abs=float(row["max_abs"]),
                        diverged=bool(int(row["diverged"])),
                    )
                )
        n = len(snaps)
        times_arr = np.array(times[:n]) if len(times) >= n else np.linspace(
            0.0, header["T"], n
        )
        return cls(
            grid=grid,
            times=times_arr,
            snapshots=snaps,
            records=records,
            dt=header["dt"],
            coeff_descriptor=header.get("coeff_descriptor", {}),
            kappa_list=tuple(kl),
        )


def step(u: RealField, t: float, dt: float, coeffs: CoefficientSet | None = None) -> RealField:
    """One IFRK4 step of the gKdV flow (dt may be negative)."""
    grid = u.grid
    lin = (1j * grid.xi**3).copy()
    lin[grid.points // 2] = 0.0
    nl = _nonlinear_hat(grid, coeffs)
    _, snaps, _ = ifrk4_solve(u, dt, abs(dt), lin, nl, save_every=1, t0=t)
    return snaps[-1]


def solve(
    u0: RealField,
    T: float,
    dt: float | None = None,
    coeffs: CoefficientSet | None = None,
    save_every: int | None = None,
    kappa_list=(),
) -> Trajectory:
    """Integrate the gKdV flow to time T (T < 0 runs backward).

    Snapshots are saved every save_every steps (default targets >= 200
    records); each record carries mass, momentum, max|u|, and alpha and the
    H^-1_kappa norm for every kappa in kappa_list.
    """
    grid = u0.grid
    lin = (1j * grid.xi**3).copy()
    lin[grid.points // 2] = 0.0
    nl = _nonlinear_hat(grid, coeffs)
    record = lambda t, u, diverged=False: _make_record(u, t, kappa_list, diverged)
    used_dt = default_dt(grid) if dt is None else dt
    times, snaps, records = ifrk4_solve(
        u0, T, used_dt, lin, nl, save_every=save_every, record_fn=record
    )
    desc = coeffs.descriptor() if coeffs is not None else {"kind": "zero"}
    return Trajectory(
        grid=grid,
        times=times,
        snapshots=snaps,
        records=records,
        dt=used_dt,
        coeff_descriptor=desc,
        kappa_list=tuple(float(k) for k in kappa_list),
    )


def l2_identity_residual(traj: Trajectory, coeffs: CoefficientSet | None = None) -> np.ndarray:
    """Residual time series of the L^2 balance law.

    Centered difference of int u^2/2 minus
    int [-a1 (u')^2 + a2 u^3 - (1/2) a3' u^2 + a4 u^2] dx, normalized by
    max(1, int u^2/2); evaluated at interior snapshot times.
    """
    if len(traj.snapshots) < 3:
        raise ValueError("need at least 3 snapshots for a centered difference")
    h = traj.save_interval
    if h == 0.0:
        raise NonUniformSaveInterval("trajectory has a single snapshot")
    mom = np.array([r.momentum for r in traj.records])
    out = []
    for i in range(1, len(traj.snapshots) - 1):
        u = traj.snapshots[i]
        t = float(traj.times[i])
        ddt = (mom[i + 1] - mom[i - 1]) / (2 * h)
        rhs = 0.0
        if coeffs is not None and not coeffs.is_zero:
            up = derivative(u, 1)
            a1 = coeffs.a1(t)
            if a1 is not None:
                rhs -= integral_of_product(a1, up, up)
            a2 = coeffs.a2(t)
            if a2 is not None:
                rhs += integral_of_product(a2, u, u, u)
            a3 = coeffs.a3(t)
            if a3 is not None:
                rhs -= 0.5 * integral_of_product(derivative(a3, 1), u, u)
            a4 = coeffs.a4(t)
            if a4 is not None:
                rhs += integral_of_product(a4, u, u)
        out.append(abs(ddt - rhs) / max(1.0, mom[i]))
    return np.array(out)


def integrated_microlaw_gap(traj: Trajectory, kappa,
                            coeffs: CoefficientSet) -> tuple[float, float]:
    """Gap |alpha(T) - alpha(0) - int_0^T int drho|_u(P) dx dt.

    P is the variable-coefficient source; the space integral of the
    density-flux law says alpha's drift equals the time integral of
    int drho|_u(P).  Time quadrature is trapezoidal over the saved
    snapshots.  Returns (gap, alpha(0)).
    """
    k = as_kappa(kappa)
    traj.save_interval  # raises if nonuniform
    alphas = []
    q = []
    for t, u in zip(traj.times, traj.snapshots):
        res = greens.LaxResolvent(u, k)
        gd = res.diagonal_green()
        rho = -1.0 / (2 * gd.samples) + k + 2 * k * (
            np.fft.ifft(np.fft.fft(u.samples) / (u.grid.xi**2 + 4 * k**2)).real
        )
        alphas.append(float(np.sum(rho) * u.grid.dx))
        p = greens.gkdv_source(u, coeffs, float(t))
        dr = greens.drho_directional(u, k, p, resolvent=res)
        q.append(float(np.sum(dr.samples) * u.grid.dx))
    integral = float(np.trapezoid(q, traj.times))
    gap = abs(alphas[-1] - alphas[0] - integral)
    return gap, alphas[0]


def alpha_drift(traj: Trajectory, kappa,
                admissibility_c: float = greens.DEFAULT_ADMISSIBILITY_C) -> np.ndarray:
    """|alpha(t) - alpha(0)| / max(alpha(0), 1e-14) along the trajectory.

    Every snapshot must satisfy kappa >= 1 + C ||u(t)||^2_{H^-1_kappa};
    otherwise KappaTooSmall carries the offending time.
    """
    k = as_kappa(kappa)
    alphas = []
    for t, u in zip(traj.times, traj.snapshots):
        floor = greens.admissibility_floor(u, k, admissibility_c)
        if k < floor:
            raise KappaTooSmall(
                f"kappa = {k} < admissibility floor {floor:.3f} at t = {t:.6g}",
                t=float(t),
            )
        alphas.append(greens.rho_alpha(u, k).alpha)
    alphas = np.array(alphas)
    return np.abs(alphas - alphas[0]) / max(alphas[0], 1e-14)
