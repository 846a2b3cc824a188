# utils/bid_data.py
"""Bid pools: CSV ingestion (`category,bid`), synthetic pools, and instances
whose item values are bids drawn from randomly chosen categories."""
import logging
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from utils.fair_instance import Instance, make_instance
from utils.random_streams import make_rng, quantize

try:
    from config import BID_DECIMALS, SYNTHETIC_BID_RANGE
except ImportError:
    BID_DECIMALS = 2
    SYNTHETIC_BID_RANGE = (0.01, 100.0)

logger = logging.getLogger(__name__)

BID_COLUMNS = ["category", "bid"]


class BidDataError(ValueError):
    """Malformed bid file; `problems` lists (line number, message)."""

    def __init__(self, message, problems=()):
        self.problems = tuple(problems)
        detail = "; ".join(f"line {line}: {msg}" for line, msg in self.problems[:10])
        super().__init__(f"{message}: {detail}" if detail else message)


@dataclass(frozen=True)
class BidPool:
    categories: dict  # category -> tuple of positive Fractions

    def __post_init__(self):
        if not self.categories:
            raise BidDataError("bid pool is empty")
        for name, bids in self.categories.items():
            if not bids:
                raise BidDataError(f"category '{name}' has no bids")
            if any(b <= 0 for b in bids):
                raise BidDataError(f"category '{name}' has a non-positive bid")

    @property
    def names(self) -> list:
        return sorted(self.categories)

    def __len__(self):
        return len(self.categories)


def ingest_bids(path: str) -> BidPool:
    """Read a `category,bid` CSV; every malformed row is reported with its line number."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"bid file not found: {path}")
    df = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False)
    df.columns = [str(c).strip().lower() for c in df.columns]
    if list(df.columns) != BID_COLUMNS:
        raise BidDataError(f"expected header 'category,bid', got '{','.join(df.columns)}'", [(1, "bad header")])

    problems = []
    categories = {}
    for offset, (cat, raw_bid) in enumerate(zip(df["category"], df["bid"])):
        line = offset + 2  # header is line 1
        cat, raw_bid = cat.strip(), raw_bid.strip()
        if not cat and not raw_bid:
            continue
        if not cat:
            problems.append((line, "missing category"))
            continue
        try:
            bid = Fraction(raw_bid)
        except (ValueError, ZeroDivisionError):
            problems.append((line, f"bid '{raw_bid}' is not a decimal number"))
            continue
        if bid <= 0:
            problems.append((line, f"bid {raw_bid} is not positive"))
            continue
        categories.setdefault(cat, []).append(bid)

    if problems:
        for line, msg in problems:
            logger.error("%s line %d: %s", path, line, msg)
        raise BidDataError(f"{len(problems)} malformed row(s) in {path}", problems)
    if not categories:
        raise BidDataError(f"no bids in {path}")
    pool = BidPool({k: tuple(v) for k, v in categories.items()})
    logger.info("loaded %d categories (%d bids) from %s", len(pool),
                sum(len(v) for v in pool.categories.values()), path)
    return pool


def synthetic_bid_pool(categories: int, bids_per_category: int, seed: int,
                       bid_range: Sequence[float] = SYNTHETIC_BID_RANGE) -> BidPool:
    """Uniform bids with cent precision, for hermetic experiments."""
    lo, hi = bid_range
    rng = make_rng(seed, 5)
    floor = Fraction(1, 10 ** BID_DECIMALS)
    pool = {}
    for c in range(categories):
        draws = rng.uniform(lo, hi, bids_per_category)
        pool[f"cat{c:04d}"] = tuple(max(floor, quantize(x, BID_DECIMALS)) for x in draws)
    return BidPool(pool)


def pool_summary(pool: BidPool) -> dict:
    everything = np.array([float(b) for bids in pool.categories.values() for b in bids])
    variances = [float(np.var([float(b) for b in bids])) for bids in pool.categories.values()]
    return {
        "categories": len(pool),
        "bids": int(everything.size),
        "mean": float(everything.mean()),
        "mean_category_variance": float(np.mean(variances)),
        "min": float(everything.min()),
        "max": float(everything.max()),
    }


def instance_from_bids(pool: BidPool, n: int, m: int, seed: int,
                       entitlements: Optional[Sequence] = None) -> Instance:
    """m distinct categories; each agent's value for item j is a uniform draw
    (with replacement) from category j's bids."""
    names = pool.names
    if m > len(names):
        raise BidDataError(f"need at least {m} categories, pool has {len(names)}")
    rng = make_rng(seed, 4)
    chosen = [names[int(k)] for k in rng.choice(len(names), size=m, replace=False)]
    rows = []
    for _ in range(n):
        row = []
        for cat in chosen:
            bids = pool.categories[cat]
            row.append(bids[int(rng.integers(len(bids)))])
        rows.append(row)
    if entitlements is None:
        entitlements = [Fraction(1, n)] * n
    return make_instance(rows, entitlements)
