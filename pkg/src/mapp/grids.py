"""Uniform-grid function representation and the numerics shared by every estimator.

Densities, CDFs, clr curves and eigencurves are all carried as values sampled
on a shared uniform grid; integration is trapezoidal throughout (exact for the
piecewise-linear interpolants the grid actually represents).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

DENSITY_TOL = 1e-8

# Valuations live on [0.9, 10.1]; prices are searched within [1, 10] so the
# support keeps a small buffer on each side of the pricing range.
DEFAULT_SUPPORT = (0.9, 10.1)
DEFAULT_GRID_POINTS = 4096
DEFAULT_PRICE_RANGE = (1.0, 10.0)


@dataclass(frozen=True)
class SupportGrid:
    """Uniform grid on [lo, hi], both endpoints included."""

    lo: float
    hi: float
    n_points: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"grid needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.n_points < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_points)

    @property
    def trapezoid_weights(self) -> np.ndarray:
        """Quadrature weights w such that w @ values == trapezoid integral."""
        w = np.full(self.n_points, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w


def default_grid(n_points: int = DEFAULT_GRID_POINTS) -> SupportGrid:
    return SupportGrid(*DEFAULT_SUPPORT, n_points)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real-valued function sampled at every point of a SupportGrid."""

    grid: SupportGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.grid.n_points,):
            raise ValueError(
                f"values shape {vals.shape} does not match grid with "
                f"{self.grid.n_points} points"
            )
        if not np.isfinite(vals).all():
            raise ValueError("grid function values must all be finite")

    def __call__(self, x) -> np.ndarray:
        """Evaluate by linear interpolation between grid points."""
        return np.interp(x, self.grid.points, self.values)


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    """Nonnegative grid function integrating to 1 over its support."""

    f: GridFunction

    def __post_init__(self):
        vals = self.f.values
        if (vals < 0).any():
            raise ValueError("density values must be nonnegative")
        total = trapezoid_integral(self.f)
        if abs(total - 1.0) > DENSITY_TOL:
            raise ValueError(f"density integrates to {total!r}, expected 1")

    @property
    def grid(self) -> SupportGrid:
        return self.f.grid


def trapezoid_integral(g: GridFunction) -> float:
    """Trapezoidal-rule integral of g over [grid.lo, grid.hi]."""
    return float(trapezoid(g.values, dx=g.grid.spacing))


def cumulative_from_density(f: DensityEstimate) -> GridFunction:
    """CDF of a density by cumulative trapezoid, on the same grid.

    Nondecreasing, starts at 0 and ends at the density's total mass
    (1 within tolerance).
    """
    cdf = cumulative_trapezoid(f.f.values, dx=f.grid.spacing, initial=0.0)
    return GridFunction(f.grid, cdf)


def argmax_revenue(F: GridFunction, price_lo: float, price_hi: float) -> tuple[float, float]:
    """Maximize p * (1 - F(p)) over the grid points inside [price_lo, price_hi].

    Returns (price, value); ties are broken toward the smallest price.
    Raises ValueError when no grid point falls inside the price range.
    """
    pts = F.grid.points
    mask = (pts >= price_lo) & (pts <= price_hi)
    if not mask.any():
        raise ValueError(
            f"price range [{price_lo}, {price_hi}] contains no grid point of "
            f"[{F.grid.lo}, {F.grid.hi}] with spacing {F.grid.spacing:g}"
        )
    candidates = pts[mask]
    objective = candidates * (1.0 - F.values[mask])
    best = int(np.argmax(objective))  # first max == smallest price on a sorted grid
    return float(candidates[best]), float(objective[best])
