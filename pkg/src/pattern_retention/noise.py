"""Uniform (UN) and Gaussian (GN) cell noise with keyed, order-free randomness.

Every random number is a pure function of ``(seed, row, column, draw)``: the
four words are folded through the SplitMix64 finalizer, so a cell's outcome
does not depend on which other cells were processed or in what order.
Draws per cell:

    0  change decision, ``u < p``
    1  replacement (uniform position / category index / Box-Muller radius)
    2  Box-Muller angle (GN numeric only)

Gaussian variates use the Box-Muller transform (cosine branch).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .tabular import AttributeStats, Dataset, attribute_stats

UN, GN = "UN", "GN"
RNG_NAME = "splitmix64-keyed(seed,row,col,draw); gaussian=box-muller-cos"

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)


def _mix(z):
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _C1
        z = (z ^ (z >> np.uint64(27))) * _C2
        return z ^ (z >> np.uint64(31))


def cell_bits(seed: int, row, col: int, draw: int) -> np.ndarray:
    """64 random bits for each (row, col, draw) under ``seed``; ``row`` may be an array."""
    rows = np.asarray(row, dtype=np.uint64)
    h = _mix(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    h = _mix(h ^ np.uint64(col))
    h = _mix(h ^ np.uint64(draw))
    return _mix(h ^ rows)


def cell_uniform(seed: int, row, col: int, draw: int) -> np.ndarray:
    """Uniform doubles in [0, 1) built from the top 53 bits."""
    return (cell_bits(seed, row, col, draw) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _box_muller(u1, u2):
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * math.pi * u2)


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    p: float
    seed: int = 0

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in (UN, GN):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")


class CellStream:
    """Sequential draws for one cell; each call advances the draw counter."""

    def __init__(self, seed: int, row: int, col: int, start: int = 1):
        self.seed, self.row, self.col, self.draw = seed, row, col, start

    def uniform(self) -> float:
        u = float(cell_uniform(self.seed, self.row, self.col, self.draw))
        self.draw += 1
        return u


def perturb_value(value, stats: AttributeStats, kind: str, rng: CellStream):
    """One replacement value for a cell already chosen for change."""
    kind = kind.upper()
    u = rng.uniform()
    if stats.kind == "numeric":
        if kind == UN:
            return stats.min + (stats.max - stats.min) * u
        if stats.variance == 0:
            rng.uniform()
            return value
        z = float(_box_muller(u, rng.uniform()))
        return value + math.sqrt(stats.variance) * z
    pool = stats.uniques if kind == UN else stats.values
    return pool[min(int(u * len(pool)), len(pool) - 1)]


@dataclass
class PerturbAudit:
    cells_changed: int = 0
    cells_total: int = 0

    @property
    def rate(self) -> float:
        return self.cells_changed / self.cells_total if self.cells_total else 0.0

    def __str__(self):
        return f"{self.cells_changed} / {self.cells_total}"


def _perturb_column(col, stats: AttributeStats, kind, seed, j, rows, p):
    u0 = cell_uniform(seed, rows, j, 0)
    change = u0 < p
    out = col[rows].copy()
    if not change.any():
        return out, change
    r = rows[change]
    u1 = cell_uniform(seed, r, j, 1)
    if stats.kind == "numeric":
        if kind == UN:
            new = stats.min + (stats.max - stats.min) * u1
        elif stats.variance == 0:
            new = out[change]
        else:
            z = _box_muller(u1, cell_uniform(seed, r, j, 2))
            new = out[change] + math.sqrt(stats.variance) * z
    else:
        pool = np.array(stats.uniques if kind == UN else stats.values, dtype=object)
        pick = np.minimum((u1 * len(pool)).astype(np.int64), len(pool) - 1)
        new = pool[pick]
    out[change] = new
    return out, change


def perturb(d: Dataset, spec: NoiseSpec, workers: int = 1, audit: PerturbAudit | None = None) -> Dataset:
    """Return a noisy copy of ``d``; the class column is never touched.

    Each non-class cell is independently chosen for change with probability
    ``spec.p``. Statistics come from ``d`` only. ``workers`` splits rows into
    chunks evaluated on a thread pool; output does not depend on it.
    """
    n = len(d)
    names = d.schema.names
    cols = {}
    changed = 0
    total = 0
    chunks = np.array_split(np.arange(n, dtype=np.uint64), max(1, min(workers, n)))
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for a in d.schema.features:
            j = names.index(a.name)
            stats = attribute_stats(d, a.name)
            col = d.columns[a.name]
            jobs = [(col, stats, spec.kind, spec.seed, j, rows.astype(np.intp), spec.p)
                    for rows in chunks if len(rows)]
            parts = list(pool.map(lambda args: _perturb_column(*args), jobs)) if pool else \
                [_perturb_column(*args) for args in jobs]
            cols[a.name] = np.concatenate([p[0] for p in parts])
            changed += int(sum(p[1].sum() for p in parts))
            total += n
    finally:
        if pool:
            pool.shutdown()
    if audit is not None:
        audit.cells_changed += changed
        audit.cells_total += total
    return d.replace(**cols)
