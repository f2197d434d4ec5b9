"""Periodic spatial grid and real-valued fields on it.

The torus [0, L) with N equispaced points stands in for the real line;
all test data is expected to decay to negligible size at the box edges.
Wavenumbers follow the standard FFT layout [0, 1, ..., N/2-1, -N/2, ..., -1]
scaled by 2*pi/L.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OddPointCount


@dataclass(frozen=True)
class TorusGrid:
    """Discretization of a length-L torus with N points.

    Attributes
    ----------
    length : float
        Period L of the domain.
    points : int
        Number of grid points N (even, >= 8).
    """

    length: float
    points: int
    x: np.ndarray = field(init=False, repr=False, compare=False)
    xi: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.points % 2 != 0:
            raise OddPointCount(f"N = {self.points} must be even")
        if self.points < 8:
            raise ValueError(f"N = {self.points} must be >= 8")
        if not (self.length > 0):
            raise ValueError(f"L = {self.length} must be positive")
        dx = self.length / self.points
        object.__setattr__(self, "x", dx * np.arange(self.points))
        object.__setattr__(
            self, "xi", 2 * np.pi * np.fft.fftfreq(self.points, d=dx)
        )

    @property
    def dx(self) -> float:
        return self.length / self.points

    @property
    def xi_max(self) -> float:
        """Largest resolved |wavenumber|, pi*N/L."""
        return np.pi * self.points / self.length

    def centered(self, about: float | None = None) -> np.ndarray:
        """Signed distance from `about` (default: box center), folded to
        [-L/2, L/2); used by decay weights like 1/(1+x^2)."""
        ref = self.length / 2 if about is None else about
        half = self.length / 2
        return (self.x - ref + half) % self.length - half

    def __eq__(self, other):
        return (
            isinstance(other, TorusGrid)
            and self.length == other.length
            and self.points == other.points
        )

    def __hash__(self):
        return hash((self.length, self.points))


def make_grid(length: float, points: int) -> TorusGrid:
    """Build a TorusGrid, rejecting odd point counts and nonpositive lengths."""
    return TorusGrid(length, points)


@dataclass(frozen=True)
class RealField:
    """Real samples of a function on a TorusGrid at one time instant."""

    grid: TorusGrid
    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.shape != (self.grid.points,):
            raise ValueError(
                f"samples shape {arr.shape} != ({self.grid.points},)"
            )
        object.__setattr__(self, "samples", arr)

    @property
    def values(self) -> np.ndarray:
        return self.samples

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.samples)))

    def __add__(self, other):
        if isinstance(other, RealField):
            self._check(other)
            return RealField(self.grid, self.samples + other.samples)
        return RealField(self.grid, self.samples + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, RealField):
            self._check(other)
            return RealField(self.grid, self.samples - other.samples)
        return RealField(self.grid, self.samples - other)

    def __mul__(self, scalar):
        return RealField(self.grid, self.samples * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return RealField(self.grid, -self.samples)

    def _check(self, other: "RealField"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")


def field_from_function(grid: TorusGrid, fn) -> RealField:
    """Sample fn(x) on the grid."""
    return RealField(grid, np.asarray(fn(grid.x), dtype=float))


def zero_field(grid: TorusGrid) -> RealField:
    return RealField(grid, np.zeros(grid.points))


def pointwise(a: RealField, b: RealField) -> RealField:
    """Plain pointwise product. For products feeding spectral operators use
    spectral.dealiased_product instead."""
    a._check(b)
    return RealField(a.grid, a.samples * b.samples)
