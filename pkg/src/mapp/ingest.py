"""Real-bid ingestion: log transform, one global rescale, and the experiment split.

Raw bids are heavily right-skewed, so they are log-transformed; a single
affine map (shared across every category, so categories stay comparable)
sends the global log range onto the common valuation support.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .grids import DEFAULT_SUPPORT


class IngestError(ValueError):
    """Raw bid records failed validation."""


@dataclass(frozen=True, eq=False)
class BidCorpus:
    """Rescaled per-category bid pools plus the transform that produced them."""

    categories: dict[str, np.ndarray]  # label -> transformed bids on the support
    log_bids: dict[str, np.ndarray] = field(repr=False)  # label -> raw log-bids
    log_min: float = 0.0  # global min of log-bids across categories
    log_max: float = 0.0
    support: tuple[float, float] = DEFAULT_SUPPORT

    @property
    def scale(self) -> float:
        lo, hi = self.support
        return (hi - lo) / (self.log_max - self.log_min)

    def to_support(self, log_bid):
        """Affine map sending [log_min, log_max] onto the support."""
        return self.support[0] + (np.asarray(log_bid, dtype=float) - self.log_min) * self.scale

    def to_log(self, value):
        """Inverse of `to_support`."""
        return self.log_min + (np.asarray(value, dtype=float) - self.support[0]) / self.scale

    def transform_metadata(self) -> dict:
        return {
            "log_min": self.log_min,
            "log_max": self.log_max,
            "support": list(self.support),
            "scale": self.scale,
            "categories": {label: int(v.size) for label, v in sorted(self.categories.items())},
        }

    def save_transform(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.transform_metadata(), fh, indent=2)


def read_bid_csv(path) -> list[tuple[str, float]]:
    """Read `category,bid` rows (header required)."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["category", "bid"]:
            raise IngestError(f"{path}: expected header 'category,bid', got {header}")
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2:
                raise IngestError(f"{path}:{i}: expected 2 columns, got {row}")
            try:
                bid = float(row[1])
            except ValueError as exc:
                raise IngestError(f"{path}:{i}: bid {row[1]!r} is not a number") from exc
            records.append((row[0].strip(), bid))
    return records


def ingest_corpus(
    records: list[tuple[str, float]],
    support: tuple[float, float] = DEFAULT_SUPPORT,
) -> BidCorpus:
    """Log-transform bids and rescale the global log range onto the support.

    The min/max are taken across *all* categories; rescaling per category
    would break the cross-category comparability the shared-family methods
    rely on.
    """
    if not records:
        raise IngestError("no bid records supplied")
    log_bids: dict[str, list[float]] = {}
    for i, (label, bid) in enumerate(records, start=1):
        if not label:
            raise IngestError(f"record {i}: empty category label")
        if not (bid > 0):
            raise IngestError(f"record {i}: bid must be positive, got {bid}")
        log_bids.setdefault(label, []).append(math.log(bid))
    arrays = {label: np.array(v) for label, v in log_bids.items()}
    for label, v in arrays.items():
        if v.size == 0:
            raise IngestError(f"category {label!r} has no bids")
    gmin = min(float(v.min()) for v in arrays.values())
    gmax = max(float(v.max()) for v in arrays.values())
    if gmax <= gmin:
        raise IngestError(
            f"degenerate corpus: global log range collapses to a point ({gmin})"
        )
    corpus = BidCorpus(
        categories={},
        log_bids=arrays,
        log_min=gmin,
        log_max=gmax,
        support=support,
    )
    transformed = {label: corpus.to_support(v) for label, v in arrays.items()}
    object.__setattr__(corpus, "categories", transformed)
    return corpus


def ingest_csv(path, support: tuple[float, float] = DEFAULT_SUPPORT) -> BidCorpus:
    return ingest_corpus(read_bid_csv(path), support)


def summary_stats(corpus: BidCorpus, categories: list[str] | None = None) -> list[tuple]:
    """(label, count, min log-bid, max log-bid) per category, sorted by label."""
    labels = sorted(corpus.log_bids) if categories is None else categories
    rows = []
    for label in labels:
        if label not in corpus.log_bids:
            raise IngestError(f"unknown category {label!r}")
        v = corpus.log_bids[label]
        rows.append((label, int(v.size), float(v.min()), float(v.max())))
    return rows


SUMMARY_HEADER = "category,n_bids,log_min,log_max"


def summary_csv_rows(corpus: BidCorpus) -> list[str]:
    return [
        f"{label},{count},{lo:.6f},{hi:.6f}"
        for label, count, lo, hi in summary_stats(corpus)
    ]


@dataclass(frozen=True, eq=False)
class CorpusSplit:
    """Train pools (one per remaining category) and the held-out test pool."""

    test_category: str
    train_pools: dict[str, np.ndarray]
    test_pool: np.ndarray


def corpus_experiment_split(corpus: BidCorpus, test_category: str) -> CorpusSplit:
    if test_category not in corpus.categories:
        raise IngestError(f"unknown test category {test_category!r}")
    if len(corpus.categories) < 2:
        raise IngestError("need at least 2 categories to form a train/test split")
    train = {
        label: v for label, v in corpus.categories.items() if label != test_category
    }
    return CorpusSplit(
        test_category=test_category,
        train_pools=train,
        test_pool=corpus.categories[test_category],
    )


def resample(pool: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw m bids uniformly with replacement from a pool."""
    if m < 1:
        raise ValueError(f"need at least one draw, got m={m}")
    pool = np.asarray(pool, dtype=float)
    if pool.size == 0:
        raise ValueError("cannot resample from an empty pool")
    return pool[rng.integers(0, pool.size, size=m)]
