"""Synthetic datasets with planted rules, used by the tests and the sweep scripts."""
from __future__ import annotations

import numpy as np

from .tabular import CATEGORICAL, NUMERIC, Attribute, Dataset, Schema

PLANTED_SCHEMA = Schema(
    (
        Attribute("age", NUMERIC),
        Attribute("hours", NUMERIC),
        Attribute("gain", NUMERIC),
        Attribute("sector", CATEGORICAL),
        Attribute("region", CATEGORICAL),
        Attribute("income", CATEGORICAL),
    ),
    "income",
)


def planted_dataset(n: int = 2000, seed: int = 0, flip: float = 0.05) -> Dataset:
    """Binary-class data whose label follows a few axis-aligned rules.

    ``high`` when (age > 40 and hours > 45), or gain > 80, or sector == "tech"
    with age > 30; ``low`` otherwise. A fraction ``flip`` of labels is
    inverted so leaves are not all pure.
    """
    rng = np.random.default_rng(seed)
    age = rng.integers(18, 70, n).astype(float)
    hours = rng.integers(10, 70, n).astype(float)
    gain = np.round(rng.gamma(2.0, 15.0, n), 1)
    sector = rng.choice(["tech", "retail", "public", "farm"], n, p=[0.25, 0.35, 0.25, 0.15])
    region = rng.choice(["north", "south", "east"], n)
    high = ((age > 40) & (hours > 45)) | (gain > 80) | ((sector == "tech") & (age > 30))
    high ^= rng.random(n) < flip
    income = np.where(high, "high", "low")
    return Dataset(PLANTED_SCHEMA, {"age": age, "hours": hours, "gain": gain,
                                    "sector": sector, "region": region, "income": income})


def random_dataset(rng: np.random.Generator, schema: Schema, n: int,
                   n_categories: int = 3, n_labels: int = 2, int_range: int = 5) -> Dataset:
    """Small random dataset over ``schema`` (integer-valued numerics, few categories)."""
    cols = {}
    for a in schema.attributes:
        if a.name == schema.class_attribute:
            cols[a.name] = [f"y{v}" for v in rng.integers(0, n_labels, n)]
        elif a.numeric:
            cols[a.name] = rng.integers(0, int_range, n).astype(float)
        else:
            cols[a.name] = [f"c{v}" for v in rng.integers(0, n_categories, n)]
    return Dataset(schema, cols)
