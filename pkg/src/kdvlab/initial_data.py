"""Initial-data families used by the experiments."""
from __future__ import annotations

import numpy as np

from .grid import RealField, TorusGrid
from .spectral import as_kappa, sobolev_kappa_norm


def soliton(grid: TorusGrid, speed: float = 1.0, center: float | None = None) -> RealField:
    """u = -2 c^2 sech^2(c (x - x0)), the right-moving soliton of
    du/dt = -u''' + 6 u u' with velocity 4 c^2."""
    x0 = grid.length / 2 if center is None else center
    z = grid.centered(about=x0)
    return RealField(grid, -2 * speed**2 / np.cosh(speed * z) ** 2)


def soliton_at_time(grid: TorusGrid, t: float, speed: float = 1.0,
                    center: float | None = None) -> RealField:
    """Exact soliton profile advected by 4 c^2 t (torus-wrapped)."""
    x0 = grid.length / 2 if center is None else center
    return soliton(grid, speed, center=(x0 + 4 * speed**2 * t) % grid.length)


def gaussian_bump(grid: TorusGrid, amplitude: float = 0.5, width: float = 2.0,
                  center: float | None = None) -> RealField:
    x0 = grid.length / 2 if center is None else center
    z = (grid.x - x0 + grid.length / 2) % grid.length - grid.length / 2
    return RealField(grid, amplitude * np.exp(-((z / width) ** 2)))


def random_bandlimited(grid: TorusGrid, kappa, target_norm: float, seed: int,
                       cutoff_fraction: float = 1.0 / 3.0) -> RealField:
    """Random field with |uhat(xi)| proportional to (xi^2+4k^2)^{-1/2}.

    Phases are the only randomness (fixed-seed coloring); modes above
    N*cutoff_fraction are zero; the result is scaled to the requested
    H^-1_kappa norm.  This sits exactly at the regularity the alpha bounds
    are designed for while staying band-limited for the grid.
    """
    k = as_kappa(kappa)
    n = grid.points
    ncut = max(2, int(n * cutoff_fraction))
    rng = np.random.default_rng(seed)
    co = np.zeros(n, dtype=complex)
    amp = (grid.xi[1:ncut] ** 2 + 4 * k**2) ** (-0.5)
    phases = np.exp(2j * np.pi * rng.random(ncut - 1))
    co[1:ncut] = amp * phases
    co[-1:-ncut:-1] = np.conj(co[1:ncut])
    u = RealField(grid, np.fft.ifft(co).real)
    nrm = sobolev_kappa_norm(u, -1.0, k)
    return RealField(grid, u.samples * (target_norm / nrm))


def from_descriptor(grid: TorusGrid, desc: dict) -> RealField:
    """Build initial data from a config descriptor {kind, params...}."""
    kind = desc.get("kind")
    if kind == "soliton":
        return soliton(grid, desc.get("speed", 1.0), desc.get("center"))
    if kind == "gaussian":
        return gaussian_bump(
            grid, desc.get("amplitude", 0.5), desc.get("width", 2.0), desc.get("center")
        )
    if kind == "random_bandlimited":
        if "seed" not in desc:
            raise ValueError("random initial data requires a seed")
        return random_bandlimited(
            grid,
            desc.get("kappa", 1.0),
            desc.get("target_norm", 0.5),
            int(desc["seed"]),
            desc.get("cutoff_fraction", 1.0 / 3.0),
        )
    raise ValueError(f"unknown initial data kind {kind!r}")
