"""Deterministic CART induction emitting root-to-leaf paths as a partition PatternSet.

Gini impurity, binary splits, no pruning. Numeric attributes split at midpoints
between adjacent distinct values; categorical attributes split one-vs-rest
(``a == v`` left, ``a != v`` right).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .patterns import EQ, GT, LE, NEQ, Condition, Pattern, PatternSet
from .tabular import Dataset

# decreases closer than this are treated as ties and resolved by the tie rule
TIE_EPS = 1e-12


@dataclass(frozen=True)
class MinerParams:
    min_leaf_fraction: float = 0.02
    max_depth: int = 12

    def __post_init__(self):
        if not 0 < self.min_leaf_fraction <= 0.5:
            raise ValueError("min_leaf_fraction must lie in (0, 0.5]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be positive")

    def min_leaf(self, n: int) -> int:
        # the small epsilon keeps e.g. 0.02 * 300 = 6.000000000000001 at 6
        return max(1, math.ceil(self.min_leaf_fraction * n - 1e-9))


@dataclass(frozen=True)
class SplitCandidate:
    attribute: str
    op: str  # LE for numeric thresholds, EQ for categorical one-vs-rest
    value: float | str
    impurity_decrease: float

    def conditions(self) -> tuple[Condition, Condition]:
        """(left, right) edge conditions."""
        if self.op == LE:
            return Condition(self.attribute, LE, self.value), Condition(self.attribute, GT, self.value)
        return Condition(self.attribute, EQ, self.value), Condition(self.attribute, NEQ, self.value)


def gini(label_counts) -> float:
    counts = np.asarray(list(label_counts.values()) if isinstance(label_counts, dict)
                        else label_counts, dtype=np.float64)
    n = counts.sum()
    if n <= 0:
        raise ValueError("gini of an empty node is undefined")
    return float(1.0 - np.sum((counts / n) ** 2))


class _Encoded:
    """Integer-coded view of a dataset shared by every node of one tree."""

    def __init__(self, d: Dataset):
        self.d = d
        self.labels = d.label_values()
        codes = {y: i for i, y in enumerate(self.labels)}
        self.y = np.array([codes[v] for v in d.labels.tolist()], dtype=np.int64)
        self.onehot = np.eye(len(self.labels), dtype=np.int64)[self.y]
        self.features = []
        for a in d.schema.features:
            col = d.columns[a.name]
            if a.numeric:
                self.features.append((a.name, True, col, None))
            else:
                uniq = sorted(set(col.tolist()))
                lookup = {v: i for i, v in enumerate(uniq)}
                codes_a = np.array([lookup[v] for v in col.tolist()], dtype=np.int64)
                self.features.append((a.name, False, codes_a, uniq))


def _weighted_child_impurity(left: np.ndarray, total: np.ndarray) -> np.ndarray:
    """n * weighted Gini of the two children for each row of ``left`` counts."""
    right = total - left
    n_l = left.sum(axis=1).astype(np.float64)
    n_r = right.sum(axis=1).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        imp_l = n_l - np.where(n_l > 0, (left.astype(np.float64) ** 2).sum(axis=1) / n_l, 0.0)
        imp_r = n_r - np.where(n_r > 0, (right.astype(np.float64) ** 2).sum(axis=1) / n_r, 0.0)
    return imp_l + imp_r, n_l, n_r


def _best_split(enc: _Encoded, idx: np.ndarray, min_leaf: int) -> SplitCandidate | None:
    n = len(idx)
    if n < 2 * min_leaf:
        return None
    onehot = enc.onehot[idx]
    total = onehot.sum(axis=0)
    parent = gini(total)
    best = None
    best_dec = TIE_EPS
    for name, numeric, col, uniq in enc.features:
        if numeric:
            x = col[idx]
            order = np.argsort(x, kind="stable")
            xs = x[order]
            left = np.cumsum(onehot[order], axis=0)[:-1]
            pos = np.arange(1, n)  # left size at each cut
            ok = (xs[:-1] < xs[1:]) & (pos >= min_leaf) & (n - pos >= min_leaf)
            if not ok.any():
                continue
            cut = np.flatnonzero(ok)
            child, _, _ = _weighted_child_impurity(left[cut], total)
            dec = parent - child / n
            j = _first_max(dec)
            if dec[j] > best_dec + TIE_EPS or (best is None and dec[j] > TIE_EPS):
                lo, hi = float(xs[cut[j]]), float(xs[cut[j] + 1])
                thr = (lo + hi) / 2.0
                if not lo <= thr < hi:  # adjacent floats: midpoint rounds onto hi
                    thr = lo
                best, best_dec = SplitCandidate(name, LE, thr, float(dec[j])), float(dec[j])
        else:
            codes = col[idx]
            k = len(uniq)
            counts = np.zeros((k, len(enc.labels)), dtype=np.int64)
            np.add.at(counts, (codes, enc.y[idx]), 1)
            sizes = counts.sum(axis=1)
            ok = (sizes >= min_leaf) & (n - sizes >= min_leaf)
            if not ok.any():
                continue
            cand = np.flatnonzero(ok)
            child, _, _ = _weighted_child_impurity(counts[cand], total)
            dec = parent - child / n
            j = _first_max(dec)
            if dec[j] > best_dec + TIE_EPS or (best is None and dec[j] > TIE_EPS):
                best, best_dec = SplitCandidate(name, EQ, uniq[cand[j]], float(dec[j])), float(dec[j])
    return best


def _first_max(values: np.ndarray) -> int:
    return int(np.flatnonzero(values >= values.max() - TIE_EPS)[0])


def best_split(records, d: Dataset, params: MinerParams) -> SplitCandidate | None:
    """Best Gini split of the given record indices, or ``None``.

    The minimum leaf size is derived from ``len(d)``.
    """
    enc = _Encoded(d)
    return _best_split(enc, np.asarray(records, dtype=np.intp), params.min_leaf(len(d)))


def mine_patterns(d: Dataset, params: MinerParams | None = None) -> PatternSet:
    """Grow a tree on ``d`` and return its leaves, left (condition true) first."""
    params = params or MinerParams()
    enc = _Encoded(d)
    min_leaf = params.min_leaf(len(d))
    leaves = []
    # explicit stack of (indices, path); push right before left for left-first order
    stack = [(np.arange(len(d)), ())]
    while stack:
        idx, path = stack.pop()
        counts = enc.onehot[idx].sum(axis=0)
        split = None
        if len(path) < params.max_depth and np.count_nonzero(counts) > 1:
            split = _best_split(enc, idx, min_leaf)
        if split is None:
            leaves.append((path, counts))
            continue
        left_c, right_c = split.conditions()
        go_left = left_c.mask(d.columns[split.attribute][idx])
        stack.append((idx[~go_left], path + (right_c,)))
        stack.append((idx[go_left], path + (left_c,)))

    patterns = tuple(
        Pattern(i, path, {y: int(c) for y, c in zip(enc.labels, counts)}, depth=len(path))
        for i, (path, counts) in enumerate(leaves))
    total = enc.onehot.sum(axis=0)
    majority = enc.labels[int(np.argmax(total))]  # argmax picks the first (smallest) label on ties
    prior = {y: int(c) / len(d) for y, c in zip(enc.labels, total)}
    return PatternSet(patterns, d.schema.fingerprint(), majority, True, prior)
