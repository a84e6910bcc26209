"""Ground-truth value distributions, the monopoly-price oracle, and regret accounting.

The oracle is a brute-force grid search over the analytic CDF; every
estimator price in the benchmarks is scored against it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import betainc, ndtr

from .grids import DEFAULT_PRICE_RANGE, DEFAULT_SUPPORT, GridFunction, SupportGrid

ORACLE_RESOLUTION = 100_000

# Instantaneous regret is clamped at zero: the oracle's OPT is a true
# maximum, so tiny negative values can only come from grid mismatch.
_REGRET_CLAMP = 0.0


@dataclass(frozen=True)
class ValueDistribution:
    """Buyer valuation distribution supported on a bounded interval.

    Subclasses provide pdf/cdf; quantiles come from a bisection inversion of
    the CDF, so any subclass with a valid CDF can be sampled.
    """

    support: tuple[float, float] = DEFAULT_SUPPORT
    kind = "abstract"

    def __post_init__(self):
        lo, hi = self.support
        if not lo < hi:
            raise ValueError(f"support needs lo < hi, got {self.support}")

    def pdf(self, v) -> np.ndarray:
        raise NotImplementedError

    def cdf(self, v) -> np.ndarray:
        raise NotImplementedError

    def ppf(self, q) -> np.ndarray:
        """Quantile function by vectorized bisection on the CDF."""
        q = np.asarray(q, dtype=float)
        lo = np.full(q.shape, self.support[0])
        hi = np.full(q.shape, self.support[1])
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < q
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class TruncGaussian(ValueDistribution):
    """Gaussian truncated (and renormalized) to the support interval."""

    mean: float = 5.0
    sd: float = 2.0
    kind = "trunc_gaussian"

    def __post_init__(self):
        super().__post_init__()
        if self.sd <= 0:
            raise ValueError("sd must be positive")

    def _z(self, v):
        return (np.asarray(v, dtype=float) - self.mean) / self.sd

    @property
    def _mass(self) -> float:
        lo, hi = self.support
        return float(ndtr(self._z(hi)) - ndtr(self._z(lo)))

    def pdf(self, v):
        z = self._z(v)
        raw = np.exp(-0.5 * z**2) / (self.sd * np.sqrt(2.0 * np.pi))
        return self._on_support(v, raw / self._mass)

    def cdf(self, v):
        lo, _ = self.support
        raw = (ndtr(self._z(v)) - ndtr(self._z(lo))) / self._mass
        return np.clip(raw, 0.0, 1.0)

    def _on_support(self, v, vals):
        v = np.asarray(v, dtype=float)
        lo, hi = self.support
        return np.where((v >= lo) & (v <= hi), vals, 0.0)


@dataclass(frozen=True)
class RescaledBeta(ValueDistribution):
    """Beta(alpha, beta) affinely mapped from [0, 1] onto the support."""

    alpha: float = 7.5
    beta: float = 2.5
    kind = "rescaled_beta"

    def __post_init__(self):
        super().__post_init__()
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("beta shape parameters must be positive")

    def _unit(self, v):
        lo, hi = self.support
        return (np.asarray(v, dtype=float) - lo) / (hi - lo)

    def pdf(self, v):
        lo, hi = self.support
        x = np.clip(self._unit(v), 0.0, 1.0)
        raw = x ** (self.alpha - 1.0) * (1.0 - x) ** (self.beta - 1.0)
        raw /= beta_fn(self.alpha, self.beta) * (hi - lo)
        v = np.asarray(v, dtype=float)
        return np.where((v >= lo) & (v <= hi), raw, 0.0)

    def cdf(self, v):
        x = np.clip(self._unit(v), 0.0, 1.0)
        return betainc(self.alpha, self.beta, x)

    @property
    def mean(self) -> float:
        lo, hi = self.support
        return lo + (hi - lo) * self.alpha / (self.alpha + self.beta)


@dataclass(frozen=True)
class TruncExponential(ValueDistribution):
    """Exponential(rate) truncated (and renormalized) to the support."""

    rate: float = 0.25
    kind = "trunc_exponential"

    def __post_init__(self):
        super().__post_init__()
        if self.rate <= 0:
            raise ValueError("rate must be positive")

    @property
    def _mass(self) -> float:
        lo, hi = self.support
        return float(np.exp(-self.rate * lo) - np.exp(-self.rate * hi))

    def pdf(self, v):
        v = np.asarray(v, dtype=float)
        lo, hi = self.support
        raw = self.rate * np.exp(-self.rate * v) / self._mass
        return np.where((v >= lo) & (v <= hi), raw, 0.0)

    def cdf(self, v):
        v = np.asarray(v, dtype=float)
        lo, _ = self.support
        raw = (np.exp(-self.rate * lo) - np.exp(-self.rate * v)) / self._mass
        return np.clip(raw, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution(ValueDistribution):
    """Grid-backed distribution, typically a smoothed eCDF of a bid pool.

    Serves as ground truth when no analytic family is available (real bid
    corpora): pdf and cdf are linear interpolants of grid samples.
    """

    grid_points: np.ndarray = field(default=None, repr=False)
    pdf_values: np.ndarray = field(default=None, repr=False)
    cdf_values: np.ndarray = field(default=None, repr=False)
    kind = "empirical"

    def __post_init__(self):
        super().__post_init__()
        for name in ("grid_points", "pdf_values", "cdf_values"):
            if getattr(self, name) is None:
                raise ValueError(f"EmpiricalDistribution requires {name}")

    @classmethod
    def from_density(cls, density) -> "EmpiricalDistribution":
        """Wrap a DensityEstimate (e.g. a KDE of a pooled sample) as truth."""
        from .grids import cumulative_from_density

        grid = density.grid
        cdf = cumulative_from_density(density)
        return cls(
            support=(grid.lo, grid.hi),
            grid_points=grid.points,
            pdf_values=density.f.values,
            cdf_values=np.clip(cdf.values, 0.0, 1.0),
        )

    def pdf(self, v):
        return np.interp(v, self.grid_points, self.pdf_values)

    def cdf(self, v):
        return np.interp(v, self.grid_points, self.cdf_values)


@dataclass(frozen=True)
class RegretRecord:
    """One scored round: the mechanism's price versus the oracle."""

    round: int
    estimator_id: str
    n_bids: int
    price: float
    opt_price: float
    instantaneous_regret: float

    CSV_HEADER = "round,estimator,n_bids,price,opt_price,regret"

    def to_csv_row(self) -> str:
        return (
            f"{self.round},{self.estimator_id},{self.n_bids},"
            f"{self.price!r},{self.opt_price!r},{self.instantaneous_regret!r}"
        )


def revenue_at(dist: ValueDistribution, price: float) -> float:
    """Expected per-buyer revenue p * (1 - F(p)) under the true CDF."""
    return float(price * (1.0 - dist.cdf(price)))


def oracle_monopoly(
    dist: ValueDistribution,
    price_range: tuple[float, float] = DEFAULT_PRICE_RANGE,
    resolution: int = ORACLE_RESOLUTION,
) -> tuple[float, float]:
    """Monopoly price and optimal revenue by brute-force grid search.

    Independent of every estimator path: only the analytic CDF is consulted.
    Ties break toward the smallest price.
    """
    prices = np.linspace(price_range[0], price_range[1], resolution)
    objective = prices * (1.0 - dist.cdf(prices))
    best = int(np.argmax(objective))
    return float(prices[best]), float(objective[best])


def instantaneous_regret(
    dist: ValueDistribution,
    price: float,
    price_range: tuple[float, float] = DEFAULT_PRICE_RANGE,
    resolution: int = ORACLE_RESOLUTION,
) -> float:
    """OPT minus the expected revenue at `price`, clamped at zero."""
    _, opt = oracle_monopoly(dist, price_range, resolution)
    return max(opt - revenue_at(dist, price), _REGRET_CLAMP)


def score_round(
    dist: ValueDistribution,
    price: float,
    *,
    round_index: int,
    estimator_id: str,
    n_bids: int,
    price_range: tuple[float, float] = DEFAULT_PRICE_RANGE,
    resolution: int = ORACLE_RESOLUTION,
) -> RegretRecord:
    """Build the RegretRecord for one mechanism round."""
    opt_price, opt = oracle_monopoly(dist, price_range, resolution)
    regret = max(opt - revenue_at(dist, price), _REGRET_CLAMP)
    return RegretRecord(
        round=round_index,
        estimator_id=estimator_id,
        n_bids=n_bids,
        price=price,
        opt_price=opt_price,
        instantaneous_regret=regret,
    )


def average_cumulative_regret(records: list[RegretRecord]) -> float:
    """Mean instantaneous regret across rounds."""
    if not records:
        raise ValueError("average_cumulative_regret needs at least one record")
    return float(np.mean([r.instantaneous_regret for r in records]))


def virtual_valuation(dist: ValueDistribution, p: float) -> float:
    """Diagnostic p - (1 - F(p)) / f(p); zero at the monopoly price."""
    density = float(dist.pdf(p))
    if density == 0.0:
        raise ValueError(f"virtual valuation undefined where the density is 0 (p={p})")
    return float(p - (1.0 - dist.cdf(p)) / density)


def true_cdf_on_grid(dist: ValueDistribution, grid: SupportGrid) -> GridFunction:
    """Sample the analytic CDF on a grid (for RoundOutcome revenue fields)."""
    return GridFunction(grid, np.asarray(dist.cdf(grid.points), dtype=float))
