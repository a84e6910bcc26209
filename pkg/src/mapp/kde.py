"""Kernel density estimation on the shared grid, plus the eCDF baseline.

All kernels are compactly supported on [-1, 1], which satisfies the usual
validity / symmetry / zero-mean / finite-moment conditions and trivially
gives exponential tail decay.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grids import DensityEstimate, GridFunction, SupportGrid, trapezoid_integral


class EstimationError(RuntimeError):
    """A density estimator could not produce a valid estimate."""


def _epanechnikov(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u**2), 0.0)


def _triangular(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 1.0 - np.abs(u), 0.0)


def _biweight(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, (15.0 / 16.0) * (1.0 - u**2) ** 2, 0.0)


@dataclass(frozen=True)
class Kernel:
    """Compactly supported kernel on [-1, 1]."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, u) -> np.ndarray:
        return self.fn(u)


EPANECHNIKOV = Kernel("epanechnikov", _epanechnikov)
TRIANGULAR = Kernel("triangular", _triangular)
BIWEIGHT = Kernel("biweight", _biweight)

KERNELS = {k.name: k for k in (EPANECHNIKOV, TRIANGULAR, BIWEIGHT)}

# Degenerate samples (all equal, or a single bid) have zero standard
# deviation; the Silverman-style scale is floored so the bandwidth stays
# strictly positive and wider than the grid spacing.
_MIN_SCALE = 0.1


def silverman_scale(samples: np.ndarray) -> float:
    """Silverman-style spread constant 1.06 * sample standard deviation."""
    sd = float(np.std(np.asarray(samples, dtype=float)))
    return 1.06 * max(sd, _MIN_SCALE)


@dataclass(frozen=True)
class Bandwidth:
    """Bandwidth schedule: a rate in the sample count times a spread constant.

    rule "exploration" decays as n^(-1/3), "exploitation" as n^(-1/2), and
    "fixed" ignores n. When `constant` is None the spread is taken from the
    samples via `silverman_scale`.
    """

    rule: str = "exploration"
    constant: float | None = None

    _RATES = {
        "exploration": -1.0 / 3.0,
        "exploitation": -1.0 / 2.0,
        "fixed": 0.0,
    }

    def __post_init__(self):
        if self.rule not in self._RATES:
            raise ValueError(f"unknown bandwidth rule {self.rule!r}")
        if self.constant is not None and self.constant <= 0:
            raise ValueError("bandwidth constant must be positive")

    def value(self, samples: np.ndarray) -> float:
        """Resolve the bandwidth for a concrete sample vector."""
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        if n == 0:
            raise EstimationError("cannot pick a bandwidth for empty samples")
        scale = self.constant if self.constant is not None else silverman_scale(samples)
        return float(scale * n ** self._RATES[self.rule])


def kde_estimate(
    samples: np.ndarray,
    kernel: Kernel,
    bandwidth: float,
    grid: SupportGrid,
) -> DensityEstimate:
    """Kernel density estimate (1/(m*w)) * sum_j K((p - b_j)/w) on the grid.

    The raw estimate is clipped at zero and renormalized so it integrates to
    one over the grid; this folds any kernel mass that leaks past the support
    boundaries back into the estimate.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise EstimationError("kde_estimate needs at least one sample")
    if bandwidth <= 0:
        raise EstimationError(f"bandwidth must be positive, got {bandwidth}")
    if samples.min() < grid.lo or samples.max() > grid.hi:
        raise EstimationError(
            f"samples outside grid support [{grid.lo}, {grid.hi}]: "
            f"range [{samples.min()}, {samples.max()}]"
        )

    # Sorting gives a canonical accumulation order, so the result is
    # bit-identical under any permutation of the input samples.
    samples = np.sort(samples)
    pts = grid.points
    raw = np.zeros(grid.n_points)
    chunk = 256
    for start in range(0, samples.size, chunk):
        block = samples[start : start + chunk]
        raw += kernel((pts[:, None] - block[None, :]) / bandwidth).sum(axis=1)
    raw /= samples.size * bandwidth

    np.clip(raw, 0.0, None, out=raw)
    g = GridFunction(grid, raw)
    total = trapezoid_integral(g)
    if not np.isfinite(total) or total <= 0.0:
        raise EstimationError(
            f"kde mass vanished on the grid (integral {total}); "
            f"bandwidth {bandwidth:g} is too small for spacing {grid.spacing:g}"
        )
    return DensityEstimate(GridFunction(grid, raw / total))


def ecdf_cdf(samples: np.ndarray, grid: SupportGrid) -> GridFunction:
    """Empirical CDF F(p) = #{b_j <= p} / m evaluated at the grid points."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise EstimationError("ecdf_cdf needs at least one sample")
    ordered = np.sort(samples)
    counts = np.searchsorted(ordered, grid.points, side="right")
    return GridFunction(grid, counts / samples.size)
