"""The two-phase mechanism for a single round.

Phase I prices each bidder from a density estimated on the *opposite*
group's bids (bid-independent, hence truthful); phase II posts the maximum
auction price for later arrivals. Prices are computed once per group: the
pricing function is constant across a group, so two estimator calls cover
all bidders.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import (
    DEFAULT_PRICE_RANGE,
    DensityEstimate,
    GridFunction,
    SupportGrid,
    argmax_revenue,
    cumulative_from_density,
    default_grid,
)
from .kde import Bandwidth, EPANECHNIKOV, EstimationError, Kernel, ecdf_cdf, kde_estimate
from .rde import ExpFamilyModel, family_density, fit_theta_mle


@dataclass(frozen=True, eq=False)
class BidSet:
    """Bids plus their random group assignment (balanced 0/1 split)."""

    bids: np.ndarray
    groups: np.ndarray

    def __post_init__(self):
        bids = np.asarray(self.bids, dtype=float)
        groups = np.asarray(self.groups, dtype=int)
        object.__setattr__(self, "bids", bids)
        object.__setattr__(self, "groups", groups)
        if bids.ndim != 1 or bids.shape != groups.shape:
            raise ValueError("bids and groups must be 1-d arrays of equal length")
        if bids.size < 2:
            raise ValueError("a round needs at least 2 bids (one per group)")
        if not np.isin(groups, (0, 1)).all():
            raise ValueError("groups must contain only 0 and 1")
        size0 = int(np.sum(groups == 0))
        size1 = groups.size - size0
        if abs(size0 - size1) > 1:
            raise ValueError(f"split must be balanced, got sizes {size0}/{size1}")
        if size0 == 0 or size1 == 0:
            raise ValueError("both groups must be nonempty")

    @property
    def n(self) -> int:
        return self.bids.size

    def group_bids(self, g: int) -> np.ndarray:
        return self.bids[self.groups == g]


@dataclass(frozen=True, eq=False)
class RoundOutcome:
    """Result of one mechanism round."""

    auction_prices: np.ndarray
    auction_allocations: np.ndarray
    posted_price: float
    auction_revenue: float
    posted_expected_revenue_per_buyer: float | None
    estimator_id: str
    group_prices: tuple[float, float]  # price charged to group 0, group 1

    CSV_HEADER = (
        "round,estimator,price_group0,price_group1,posted_price,"
        "auction_revenue,posted_expected_revenue_per_buyer"
    )

    def to_csv_row(self, round_index: int) -> str:
        posted_rev = "" if self.posted_expected_revenue_per_buyer is None else repr(
            self.posted_expected_revenue_per_buyer
        )
        return (
            f"{round_index},{self.estimator_id},{self.group_prices[0]!r},"
            f"{self.group_prices[1]!r},{self.posted_price!r},"
            f"{self.auction_revenue!r},{posted_rev}"
        )


@dataclass(frozen=True)
class EcdfPricer:
    """Step-function empirical CDF pricing."""

    grid: SupportGrid = field(default_factory=default_grid)
    estimator_id = "ecdf"

    def cdf(self, bids: np.ndarray) -> GridFunction:
        return ecdf_cdf(bids, self.grid)


@dataclass(frozen=True)
class KdePricer:
    """Kernel-density pricing; bandwidth resolved per group from its bids."""

    grid: SupportGrid = field(default_factory=default_grid)
    kernel: Kernel = EPANECHNIKOV
    bandwidth: Bandwidth = Bandwidth("exploration")
    estimator_id = "kde"

    def density(self, bids: np.ndarray) -> DensityEstimate:
        return kde_estimate(bids, self.kernel, self.bandwidth.value(bids), self.grid)

    def cdf(self, bids: np.ndarray) -> GridFunction:
        return cumulative_from_density(self.density(bids))


@dataclass(frozen=True, eq=False)
class RdePricer:
    """Exponential-family pricing against a frozen trained model."""

    model: ExpFamilyModel
    estimator_id = "rde"

    @property
    def grid(self) -> SupportGrid:
        return self.model.grid

    def density(self, bids: np.ndarray) -> DensityEstimate:
        theta = fit_theta_mle(bids, self.model)
        return family_density(self.model, theta)

    def cdf(self, bids: np.ndarray) -> GridFunction:
        return cumulative_from_density(self.density(bids))


def random_split(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random balanced partition into groups 0/1.

    A seeded shuffle of the indices puts the first ceil(n/2) into group 0;
    deterministic given the generator state.
    """
    if n < 2:
        raise ValueError(f"need at least 2 bidders to split, got {n}")
    order = rng.permutation(n)
    groups = np.ones(n, dtype=int)
    groups[order[: (n + 1) // 2]] = 0
    return groups


def auction_prices(
    bids: BidSet,
    pricer,
    price_range: tuple[float, float] = DEFAULT_PRICE_RANGE,
) -> tuple[np.ndarray, tuple[float, float]]:
    """Bid-independent per-bidder prices (Phase I).

    Exactly two estimator invocations: the price for group g comes from the
    opposite group's bids. Returns (per-bidder prices, (q0, q1)).
    """
    _check_support(bids, pricer.grid)
    prices_by_group = []
    for g in (0, 1):
        opposite = bids.group_bids(1 - g)
        try:
            cdf = pricer.cdf(opposite)
        except EstimationError as exc:
            raise EstimationError(
                f"estimator {pricer.estimator_id!r} failed on group {1 - g}: {exc}"
            ) from exc
        price, _ = argmax_revenue(cdf, *price_range)
        prices_by_group.append(price)
    per_bidder = np.where(bids.groups == 0, prices_by_group[0], prices_by_group[1])
    return per_bidder, (prices_by_group[0], prices_by_group[1])


def run_round(
    bids: BidSet,
    pricer,
    price_range: tuple[float, float] = DEFAULT_PRICE_RANGE,
    true_cdf: GridFunction | None = None,
) -> RoundOutcome:
    """One full round: auction pricing, allocation, and the posted price.

    With `true_cdf` supplied, fills the expected per-buyer posted-phase
    revenue p * (1 - F(p)) — a distributional quantity, not a realized sum.
    """
    prices, group_prices = auction_prices(bids, pricer, price_range)
    allocations = (bids.bids >= prices).astype(int)
    posted = float(prices.max())
    revenue = float(np.sum(prices * allocations))
    posted_expected = None
    if true_cdf is not None:
        posted_expected = float(posted * (1.0 - true_cdf(posted)))
    return RoundOutcome(
        auction_prices=prices,
        auction_allocations=allocations,
        posted_price=posted,
        auction_revenue=revenue,
        posted_expected_revenue_per_buyer=posted_expected,
        estimator_id=pricer.estimator_id,
        group_prices=group_prices,
    )


def _check_support(bids: BidSet, grid: SupportGrid) -> None:
    if bids.bids.min() < grid.lo or bids.bids.max() > grid.hi:
        raise ValueError(
            f"bids outside the pricing grid support [{grid.lo}, {grid.hi}]"
        )
