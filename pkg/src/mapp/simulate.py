"""Synthetic market generators: random distribution families and bid draws.

Each family draws hyperparameters uniformly from configured ranges and
returns a valuation distribution on the common support; families model a
stable (Gaussian), niche (Beta), and high-demand (Exponential) market.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import DEFAULT_SUPPORT
from .regret import RescaledBeta, TruncExponential, TruncGaussian, ValueDistribution

GAUSSIAN_MEAN_RANGE = (4.5, 5.5)
GAUSSIAN_SD_RANGE = (1.0, 3.0)
BETA_ALPHA_RANGE = (5.0, 10.0)
BETA_MEAN_RANGE = (5.0, 9.0)
EXPONENTIAL_MEAN_RANGE = (2.0, 6.0)

FAMILY_KINDS = ("gaussian", "beta", "exponential")


@dataclass(frozen=True)
class FamilySampler:
    """Draws i.i.d. round distributions from one parametric family."""

    kind: str
    support: tuple[float, float] = DEFAULT_SUPPORT
    gaussian_mean_range: tuple[float, float] = GAUSSIAN_MEAN_RANGE
    gaussian_sd_range: tuple[float, float] = GAUSSIAN_SD_RANGE
    beta_alpha_range: tuple[float, float] = BETA_ALPHA_RANGE
    beta_mean_range: tuple[float, float] = BETA_MEAN_RANGE
    exponential_mean_range: tuple[float, float] = EXPONENTIAL_MEAN_RANGE

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}; expected one of {FAMILY_KINDS}")

    def sample(self, rng: np.random.Generator) -> ValueDistribution:
        lo, hi = self.support
        if self.kind == "gaussian":
            mean = rng.uniform(*self.gaussian_mean_range)
            sd = rng.uniform(*self.gaussian_sd_range)
            return TruncGaussian(support=self.support, mean=mean, sd=sd)
        if self.kind == "beta":
            # A shape alpha and a target mean on the rescaled support pin the
            # second shape: unit mean mu = (m - lo)/(hi - lo), beta = alpha(1-mu)/mu.
            alpha = rng.uniform(*self.beta_alpha_range)
            target_mean = rng.uniform(*self.beta_mean_range)
            mu = (target_mean - lo) / (hi - lo)
            beta = alpha * (1.0 - mu) / mu
            return RescaledBeta(support=self.support, alpha=alpha, beta=beta)
        mean = rng.uniform(*self.exponential_mean_range)
        return TruncExponential(support=self.support, rate=1.0 / mean)


def sample_round_distribution(
    sampler: FamilySampler, rng: np.random.Generator
) -> ValueDistribution:
    """Draw one round's ground-truth valuation distribution."""
    return sampler.sample(rng)


def draw_bids(dist: ValueDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """n i.i.d. valuations via inverse-CDF sampling on the analytic CDF."""
    if n < 1:
        raise ValueError(f"need at least one bid, got n={n}")
    return np.asarray(dist.ppf(rng.random(n)), dtype=float)
