"""Exploration/exploitation scheduler across T sequential dataset sales.

The first ceil(sqrt(T)) rounds price with per-round KDE while collecting
one whole-round training density per round; the model trained on those
densities is frozen and prices every remaining round. Per-round randomness
is derived from a counter-based seed, so a round's outcome is independent
of the horizon and of other rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grids import DEFAULT_PRICE_RANGE, SupportGrid, default_grid
from .kde import Bandwidth, EPANECHNIKOV, EstimationError, Kernel, kde_estimate
from .mechanism import BidSet, KdePricer, RdePricer, random_split, run_round
from .rde import (
    DEFAULT_CLR_FLOOR,
    DEFAULT_K_MAX,
    DEFAULT_VARIANCE_THRESHOLD,
    ExpFamilyModel,
    clr_transform,
    fpca,
)
from .regret import RegretRecord, score_round
from .simulate import FamilySampler, draw_bids, sample_round_distribution


def default_t_prime(T: int) -> int:
    return math.ceil(math.sqrt(T))


def staged_seeds(master_seed: int, t: int, stream: int = 0) -> int:
    """Deterministic per-round seed, independent of the horizon T."""
    if t < 1:
        raise ValueError(f"round index must be >= 1, got {t}")
    seq = np.random.SeedSequence(master_seed, spawn_key=(stream, t))
    return int(seq.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class OnlineConfig:
    T: int
    bids_per_round_exploration: int = 200
    bids_per_round_exploitation: int = 200
    t_prime_rule: Callable[[int], int] = default_t_prime
    exploration_bandwidth: Bandwidth = Bandwidth("exploration")
    training_bandwidth: Bandwidth = Bandwidth("exploration")
    kernel: Kernel = EPANECHNIKOV
    variance_threshold: float = DEFAULT_VARIANCE_THRESHOLD
    k_max: int = DEFAULT_K_MAX
    clr_floor: float = DEFAULT_CLR_FLOOR
    master_seed: int = 0
    price_range: tuple[float, float] = DEFAULT_PRICE_RANGE
    grid: SupportGrid = field(default_factory=default_grid)
    refresh_model: bool = False  # experimental: refit FPCA as exploitation bids arrive

    def __post_init__(self):
        t_prime = self.t_prime_rule(self.T)
        if not 1 <= t_prime < self.T:
            raise ValueError(
                f"exploration length t'={t_prime} must satisfy 1 <= t' < T={self.T}"
            )
        if self.bids_per_round_exploration < 2 or self.bids_per_round_exploitation < 2:
            raise ValueError("bid counts must be at least 2")

    @property
    def t_prime(self) -> int:
        return self.t_prime_rule(self.T)


@dataclass(frozen=True, eq=False)
class OnlineRunResult:
    records: list[RegretRecord]
    model: ExpFamilyModel
    cumulative_regret: np.ndarray  # prefix means over recorded rounds
    t_prime: int
    skipped_rounds: list[int]
    failures: list[str]

    def average_regret(self) -> float:
        return float(self.cumulative_regret[-1])


def theorem3_bid_counts(T: int, c: float = 40.0) -> tuple[int, int]:
    """Per-stage bid counts scaled with the horizon.

    Exploration rounds get ~ c * T^(3/4) / (log T)^2 bids and exploitation
    rounds ~ c * sqrt(T) / (log T)^2, floored at 10 so estimators always
    have something to work with at desk scale.
    """
    if T < 2:
        raise ValueError("horizon must be at least 2")
    log_sq = math.log(T) ** 2
    m1 = max(10, math.ceil(c * T**0.75 / log_sq))
    m2 = max(10, math.ceil(c * math.sqrt(T) / log_sq))
    return m1, m2


def run_online(config: OnlineConfig, family_sampler: FamilySampler) -> OnlineRunResult:
    """Run Phase-I/Phase-II rounds for t = 1..T with the staged estimators.

    Exploration rounds additionally fit one KDE on *all* of the round's bids
    (no group split) as a training density. The model is frozen after the
    exploration stage; a failure there aborts, while per-round estimator
    failures skip the round and are reported in the result.
    """
    t_prime = config.t_prime
    kde_pricer = KdePricer(
        grid=config.grid, kernel=config.kernel, bandwidth=config.exploration_bandwidth
    )

    records: list[RegretRecord] = []
    skipped: list[int] = []
    failures: list[str] = []
    training = []

    for t in range(1, t_prime + 1):
        rng = np.random.default_rng(staged_seeds(config.master_seed, t))
        dist = sample_round_distribution(family_sampler, rng)
        bid_values = draw_bids(dist, config.bids_per_round_exploration, rng)
        groups = random_split(bid_values.size, rng)
        try:
            outcome = run_round(BidSet(bid_values, groups), kde_pricer, config.price_range)
            whole_round = kde_estimate(
                bid_values,
                config.kernel,
                config.training_bandwidth.value(bid_values),
                config.grid,
            )
        except EstimationError as exc:
            skipped.append(t)
            failures.append(f"round {t}: {exc}")
            continue
        training.append(clr_transform(whole_round, config.clr_floor))
        records.append(
            score_round(
                dist,
                outcome.posted_price,
                round_index=t,
                estimator_id="kde",
                n_bids=bid_values.size,
                price_range=config.price_range,
            )
        )

    try:
        model = fpca(training, config.variance_threshold, config.k_max)
    except ValueError as exc:
        raise EstimationError(
            f"model training failed at the stage boundary (t'={t_prime}, "
            f"{len(training)} training densities, {len(skipped)} skipped rounds): {exc}"
        ) from exc
    frozen_model = model

    for t in range(t_prime + 1, config.T + 1):
        rng = np.random.default_rng(staged_seeds(config.master_seed, t))
        dist = sample_round_distribution(family_sampler, rng)
        bid_values = draw_bids(dist, config.bids_per_round_exploitation, rng)
        groups = random_split(bid_values.size, rng)
        try:
            outcome = run_round(BidSet(bid_values, groups), RdePricer(model), config.price_range)
            if config.refresh_model:
                whole_round = kde_estimate(
                    bid_values,
                    config.kernel,
                    config.training_bandwidth.value(bid_values),
                    config.grid,
                )
                training.append(clr_transform(whole_round, config.clr_floor))
                model = fpca(training, config.variance_threshold, config.k_max)
        except EstimationError as exc:
            skipped.append(t)
            failures.append(f"round {t}: {exc}")
            continue
        records.append(
            score_round(
                dist,
                outcome.posted_price,
                round_index=t,
                estimator_id="rde",
                n_bids=bid_values.size,
                price_range=config.price_range,
            )
        )

    regrets = np.array([r.instantaneous_regret for r in records])
    cumulative = np.cumsum(regrets) / np.arange(1, regrets.size + 1)
    return OnlineRunResult(
        records=records,
        model=frozen_model,
        cumulative_regret=cumulative,
        t_prime=t_prime,
        skipped_rounds=skipped,
        failures=failures,
    )
