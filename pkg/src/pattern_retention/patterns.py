"""Patterns ``X -> y``: conjunctive conditions plus a consequent label distribution.

A record is covered by a pattern when it meets every condition. Coverage of a
whole dataset is computed column-wise with numpy masks; :func:`matches` is the
single-record form of the same semantics.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import PatternFormatError, SchemaMismatchError
from .tabular import Dataset, Schema

LE, GT, EQ, NEQ = "le", "gt", "eq", "neq"
NUMERIC_OPS = (LE, GT)
CATEGORICAL_OPS = (EQ, NEQ)
# NEQ is only produced by the tree miner (right branch of a one-vs-rest split).


@dataclass(frozen=True)
class Condition:
    attribute: str
    op: str
    value: float | str

    def __post_init__(self):
        if self.op in NUMERIC_OPS:
            v = float(self.value)
            if not math.isfinite(v):
                raise ValueError(f"non-finite threshold in condition on {self.attribute!r}")
            object.__setattr__(self, "value", v)
        elif self.op in CATEGORICAL_OPS:
            object.__setattr__(self, "value", str(self.value))
        else:
            raise ValueError(f"unknown operator {self.op!r}")

    def holds(self, v) -> bool:
        if self.op == LE:
            return v <= self.value
        if self.op == GT:
            return v > self.value
        if self.op == EQ:
            return v == self.value
        return v != self.value

    def mask(self, column: np.ndarray) -> np.ndarray:
        if self.op == LE:
            return column <= self.value
        if self.op == GT:
            return column > self.value
        if self.op == EQ:
            return column == self.value
        return column != self.value

    def __str__(self):
        sym = {LE: "<=", GT: ">", EQ: "==", NEQ: "!="}[self.op]
        return f"{self.attribute} {sym} {self.value}"


def normalize_conditions(conditions: Sequence[Condition]) -> tuple[Condition, ...]:
    """Canonical form: per attribute keep the tightest LE and GT bound, dedupe
    equality tests. Attributes keep first-appearance order; within an attribute
    conditions are ordered GT, LE, EQ, NEQ.

    Raises ``ValueError`` for antecedents that can never be satisfied.
    """
    order: list[str] = []
    by_attr: dict[str, dict] = {}
    for c in conditions:
        if c.attribute not in by_attr:
            order.append(c.attribute)
            by_attr[c.attribute] = {GT: None, LE: None, EQ: None, NEQ: set()}
        slot = by_attr[c.attribute]
        if c.op == GT:
            slot[GT] = c.value if slot[GT] is None else max(slot[GT], c.value)
        elif c.op == LE:
            slot[LE] = c.value if slot[LE] is None else min(slot[LE], c.value)
        elif c.op == EQ:
            if slot[EQ] is not None and slot[EQ] != c.value:
                raise ValueError(f"contradictory equality tests on {c.attribute!r}")
            slot[EQ] = c.value
        else:
            slot[NEQ].add(c.value)
    out = []
    for name in order:
        slot = by_attr[name]
        kinds = {GT, LE} if slot[GT] is not None or slot[LE] is not None else set()
        if kinds and (slot[EQ] is not None or slot[NEQ]):
            raise ValueError(f"attribute {name!r} mixes numeric and categorical tests")
        if slot[GT] is not None and slot[LE] is not None and not slot[GT] < slot[LE]:
            raise ValueError(f"empty interval ({slot[GT]}, {slot[LE]}] on {name!r}")
        if slot[EQ] is not None and slot[EQ] in slot[NEQ]:
            raise ValueError(f"contradictory tests on {name!r}")
        if slot[GT] is not None:
            out.append(Condition(name, GT, slot[GT]))
        if slot[LE] is not None:
            out.append(Condition(name, LE, slot[LE]))
        if slot[EQ] is not None:
            out.append(Condition(name, EQ, slot[EQ]))
        elif slot[NEQ]:
            out.extend(Condition(name, NEQ, v) for v in sorted(slot[NEQ]))
    return tuple(out)


@dataclass(frozen=True)
class LabelDistribution:
    counts: dict
    total: int

    @property
    def frequencies(self) -> dict:
        if self.total == 0:
            return {y: 0.0 for y in self.counts}
        return {y: n / self.total for y, n in self.counts.items()}

    def frequency(self, label) -> float:
        return self.counts.get(label, 0) / self.total if self.total else 0.0


@dataclass(frozen=True)
class Pattern:
    id: int
    conditions: tuple
    label_counts: dict = field(compare=True)
    depth: int | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "conditions", normalize_conditions(self.conditions))
        counts = {str(k): int(v) for k, v in sorted(self.label_counts.items())}
        if any(v < 0 for v in counts.values()):
            raise ValueError("label counts must be non-negative")
        object.__setattr__(self, "label_counts", counts)

    @property
    def support_d(self) -> int:
        return sum(self.label_counts.values())

    def majority_label(self):
        """Most frequent stored label; ties go to the smallest label."""
        if not self.label_counts:
            return None
        best = max(self.label_counts.values())
        return min(y for y, n in self.label_counts.items() if n == best)

    @property
    def confidence(self) -> float:
        s = self.support_d
        return self.label_counts[self.majority_label()] / s if s else 0.0

    def frequency(self, label) -> float:
        s = self.support_d
        return self.label_counts.get(label, 0) / s if s else 0.0

    def describe(self) -> str:
        lhs = " AND ".join(str(c) for c in self.conditions) or "(all records)"
        return f"{lhs} -> {self.majority_label()}"


def _check_conditions(p: Pattern, schema: Schema):
    for c in p.conditions:
        try:
            a = schema.attribute(c.attribute)
        except Exception:
            raise SchemaMismatchError(f"pattern {p.id}: unknown attribute {c.attribute!r}") from None
        if c.attribute == schema.class_attribute:
            raise SchemaMismatchError(f"pattern {p.id}: condition on the class attribute")
        if (c.op in NUMERIC_OPS) != a.numeric:
            raise SchemaMismatchError(
                f"pattern {p.id}: operator {c.op!r} incompatible with {a.kind} attribute {a.name!r}")


def matches(p: Pattern, r: Sequence, schema: Schema) -> bool:
    """True iff record ``r`` (values in schema order) meets every condition."""
    _check_conditions(p, schema)
    if len(r) != len(schema.attributes):
        raise SchemaMismatchError("record width does not match schema")
    return all(c.holds(r[schema.index(c.attribute)]) for c in p.conditions)


def coverage(p: Pattern, d: Dataset) -> np.ndarray:
    """Boolean mask of records covered by ``p``."""
    _check_conditions(p, d.schema)
    m = np.ones(len(d), dtype=bool)
    for c in p.conditions:
        m &= c.mask(d.columns[c.attribute])
    return m


def select(p: Pattern, d: Dataset) -> np.ndarray:
    return np.flatnonzero(coverage(p, d))


def support(p: Pattern, d: Dataset) -> int:
    return int(coverage(p, d).sum())


def label_distribution(p: Pattern, d: Dataset, labels=None) -> LabelDistribution:
    """Class-label counts over the records ``p`` covers in ``d``.

    ``labels`` fixes the label universe (defaults to labels present in ``d``)."""
    ys = d.labels[coverage(p, d)]
    universe = sorted(set(labels) if labels is not None else set(d.labels.tolist()))
    counts = {y: 0 for y in universe}
    for y in ys.tolist():
        counts[y] = counts.get(y, 0) + 1
    return LabelDistribution(counts, int(len(ys)))


@dataclass(frozen=True)
class PatternSet:
    patterns: tuple
    schema_fingerprint: str
    default_label: str
    partition: bool = False
    label_prior: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "patterns", tuple(self.patterns))
        ids = sorted(p.id for p in self.patterns)
        if ids != list(range(len(self.patterns))):
            raise ValueError("pattern ids must be unique and dense 0..n-1")
        if self.label_prior is not None:
            object.__setattr__(self, "label_prior",
                               {str(k): float(v) for k, v in sorted(self.label_prior.items())})

    def __len__(self):
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    @property
    def labels(self) -> list:
        ys = set(self.label_prior or ())
        for p in self.patterns:
            ys.update(p.label_counts)
        ys.add(self.default_label)
        return sorted(ys)

    def prior(self, label) -> float:
        """Frequency of ``label`` in the mining data (or pooled pattern counts)."""
        if self.label_prior is not None:
            return self.label_prior.get(label, 0.0)
        total = sum(p.support_d for p in self.patterns)
        return sum(p.label_counts.get(label, 0) for p in self.patterns) / total if total else 0.0

    def check(self, d: Dataset):
        if d.schema.fingerprint() != self.schema_fingerprint:
            raise SchemaMismatchError(
                f"pattern set was built for schema {self.schema_fingerprint}, "
                f"dataset has {d.schema.fingerprint()}")


def _resolution_order(zs: PatternSet) -> list[Pattern]:
    # confidence desc, support desc, id asc
    return sorted(zs.patterns, key=lambda p: (-p.confidence, -p.support_d, p.id))


def predict_all(zs: PatternSet, d: Dataset, positive_label=None):
    """Predicted label per record and (optionally) the positive-label score.

    Returns ``(labels, scores, matched)``. ``scores`` is ``None`` unless a
    positive label is given; unmatched records get the default label and the
    positive label's prior as score.
    """
    zs.check(d)
    n = len(d)
    pred = np.empty(n, dtype=object)
    pred[:] = zs.default_label
    scores = None
    if positive_label is not None:
        scores = np.full(n, zs.prior(positive_label), dtype=np.float64)
    matched = np.zeros(n, dtype=bool)
    ordered = sorted(zs.patterns, key=lambda p: p.id) if zs.partition else _resolution_order(zs)
    for p in ordered:
        cov = coverage(p, d)
        if zs.partition and (cov & matched).any():
            raise SchemaMismatchError("pattern set flagged as a partition has overlapping patterns")
        m = cov & ~matched
        if not m.any():
            continue
        label = p.majority_label()
        if label is not None:
            pred[m] = label
        if scores is not None:
            scores[m] = p.frequency(positive_label)
        matched |= m
    return pred, scores, matched


def predict(zs: PatternSet, r: Sequence, schema: Schema, default_label=None, positive_label=None):
    """Single-record prediction: ``(label, positive_score or None)``."""
    if schema.fingerprint() != zs.schema_fingerprint:
        raise SchemaMismatchError("record schema does not match pattern set")
    hits = [p for p in zs.patterns if matches(p, r, schema)]
    if not hits:
        return (zs.default_label if default_label is None else default_label), None
    if zs.partition:
        if len(hits) > 1:
            raise SchemaMismatchError("pattern set flagged as a partition has overlapping patterns")
        best = hits[0]
    else:
        best = min(hits, key=lambda p: (-p.confidence, -p.support_d, p.id))
    score = best.frequency(positive_label) if positive_label is not None else None
    label = best.majority_label()
    return (label if label is not None else zs.default_label), score


# -- serialization ---------------------------------------------------------

def serialize_patterns(zs: PatternSet) -> str:
    doc = {
        "schema_fingerprint": zs.schema_fingerprint,
        "default_label": zs.default_label,
        "partition": zs.partition,
    }
    if zs.label_prior is not None:
        doc["label_prior"] = zs.label_prior
    pats = []
    for p in zs.patterns:
        entry = {
            "id": p.id,
            "conditions": [{"attr": c.attribute, "op": c.op, "value": c.value}
                           for c in p.conditions],
            "label_counts": p.label_counts,
        }
        if p.depth is not None:
            entry["depth"] = p.depth
        pats.append(entry)
    doc["patterns"] = pats
    # json emits floats with repr(), which round-trips binary64 exactly
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def parse_patterns(text: str | bytes | Mapping) -> PatternSet:
    try:
        doc = text if isinstance(text, Mapping) else json.loads(text)
    except json.JSONDecodeError as exc:
        raise PatternFormatError(f"not valid JSON: {exc}") from None
    try:
        pats = []
        for entry in doc["patterns"]:
            conds = [Condition(c["attr"], c["op"], c["value"]) for c in entry["conditions"]]
            pats.append(Pattern(int(entry["id"]), tuple(conds), dict(entry["label_counts"]),
                                entry.get("depth")))
        return PatternSet(tuple(pats), str(doc["schema_fingerprint"]), str(doc["default_label"]),
                          bool(doc.get("partition", False)), doc.get("label_prior"))
    except KeyError as exc:
        raise PatternFormatError(f"missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise PatternFormatError(str(exc)) from None
