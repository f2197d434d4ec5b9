"""Slowly-varying localization weights, periodized smoothly onto the torus.

The weight sech(x/6) and the step 6*tanh(x/6) come from the admissibility
condition |w'| + |w''| <= w, w(y)/w(x) <= e^{|x-y|/2}.  Periodizing by
*summing translates* keeps them C-infinity on the torus; folding the argument
instead leaves a derivative kink at the seam, which is invisible to most
norms but destroys the kappa^{-2} cancellation of the double commutator.
"""
from __future__ import annotations

import numpy as np

from .grid import RealField, TorusGrid

WEIGHT_WIDTH = 6.0


def _nmax(width: float, length: float) -> int:
    return int(np.ceil(45.0 * width / length)) + 2


def periodized_sech(grid: TorusGrid, center: float | None = None,
                    width: float = WEIGHT_WIDTH) -> RealField:
    """Sum of sech((x - center + n*L)/width) over translates."""
    c = grid.length / 2 if center is None else center
    out = np.zeros(grid.points)
    for n in range(-_nmax(width, grid.length), _nmax(width, grid.length) + 1):
        out += 1.0 / np.cosh((grid.x - c + n * grid.length) / width)
    return RealField(grid, out)


def periodized_sech_sq(grid: TorusGrid, center: float | None = None,
                       width: float = WEIGHT_WIDTH) -> RealField:
    """Sum of sech^2 translates; the exact derivative of the step weight."""
    c = grid.length / 2 if center is None else center
    out = np.zeros(grid.points)
    for n in range(-_nmax(width, grid.length), _nmax(width, grid.length) + 1):
        out += 1.0 / np.cosh((grid.x - c + n * grid.length) / width) ** 2
    return RealField(grid, out)


def step_weight(grid: TorusGrid, center: float | None = None,
                width: float = WEIGHT_WIDTH) -> RealField:
    """Renormalized translate sum of width*tanh(x/width).

    Satisfies phi' = sum of sech^2 translates identically in x; on the torus
    phi necessarily jumps by 2*width*tanh-ish across the antipode of the
    center, since the line function gains 2*width per period.
    """
    c = grid.length / 2 if center is None else center
    w = (grid.x - c + grid.length / 2) % grid.length - grid.length / 2
    out = width * np.tanh(w / width)
    for n in range(1, _nmax(width, grid.length) + 1):
        out += width * (np.tanh((w + n * grid.length) / width) - 1.0)
        out += width * (np.tanh((w - n * grid.length) / width) + 1.0)
    return RealField(grid, out)
