"""Typed tabular data: schema, CSV ingestion, attribute statistics, CV folds.

A :class:`Dataset` stores one numpy array per attribute. Numeric columns are
``float64``; categorical columns (including the class column) are object
arrays of ``str``. All arrays are flagged read-only after construction.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import DataError

NUMERIC = "numeric"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str

    def __post_init__(self):
        if not self.name:
            raise DataError("attribute name must be non-empty")
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise DataError(f"attribute {self.name!r}: unknown kind {self.kind!r}")

    @property
    def numeric(self) -> bool:
        return self.kind == NUMERIC


@dataclass(frozen=True)
class Schema:
    """Ordered attributes plus the name of the (categorical) class attribute."""

    attributes: tuple[Attribute, ...]
    class_attribute: str

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise DataError(f"duplicate attribute names in schema: {names}")
        if self.class_attribute not in names:
            raise DataError(f"class attribute {self.class_attribute!r} not in schema")
        if self.attribute(self.class_attribute).kind != CATEGORICAL:
            raise DataError("class attribute must be categorical")
        if len(names) < 2:
            raise DataError("schema needs at least one non-class attribute")

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    @property
    def features(self) -> list[Attribute]:
        """Non-class attributes in schema order."""
        return [a for a in self.attributes if a.name != self.class_attribute]

    def attribute(self, name: str) -> Attribute:
        for a in self.attributes:
            if a.name == name:
                return a
        raise DataError(f"unknown attribute {name!r}")

    def index(self, name: str) -> int:
        return self.names.index(name)

    def to_json(self) -> dict:
        return {
            "class": self.class_attribute,
            "attributes": [{"name": a.name, "kind": a.kind} for a in self.attributes],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Schema":
        try:
            attrs = tuple(Attribute(a["name"], a["kind"]) for a in doc["attributes"])
            return cls(attrs, doc["class"])
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed schema document: {exc}") from None

    def fingerprint(self) -> str:
        canon = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def load_schema(path) -> Schema:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"schema file is not valid JSON: {exc}") from None
    return Schema.from_json(doc)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable column store. Row ``i`` of a derived dataset (e.g. a perturbed
    copy) corresponds to row ``i`` of its source."""

    schema: Schema
    columns: dict = field(repr=False)

    def __post_init__(self):
        cols = {}
        n = None
        for a in self.schema.attributes:
            if a.name not in self.columns:
                raise DataError(f"missing column {a.name!r}")
            raw = self.columns[a.name]
            if a.numeric:
                col = np.array(raw, dtype=np.float64)
                if not np.all(np.isfinite(col)):
                    raise DataError(f"non-finite value in numeric column {a.name!r}")
            else:
                col = np.array([str(v) for v in raw], dtype=object)
            if col.ndim != 1:
                raise DataError(f"column {a.name!r} must be one-dimensional")
            if n is None:
                n = len(col)
            elif len(col) != n:
                raise DataError("columns have different lengths")
            cols[a.name] = _freeze(col)
        if not n:
            raise DataError("dataset must contain at least one record")
        object.__setattr__(self, "columns", cols)

    def __len__(self) -> int:
        return len(self.columns[self.schema.class_attribute])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset) or other.schema != self.schema:
            return False
        return all(np.array_equal(self.columns[k], other.columns[k]) for k in self.columns)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def labels(self) -> np.ndarray:
        return self.columns[self.schema.class_attribute]

    def label_values(self) -> list[str]:
        """Sorted distinct class labels present in this dataset."""
        return sorted(set(self.labels.tolist()))

    def record(self, i: int) -> tuple:
        return tuple(self.columns[a.name][i] for a in self.schema.attributes)

    def records(self) -> list[tuple]:
        return [self.record(i) for i in range(len(self))]

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.schema, {k: v[idx] for k, v in self.columns.items()})

    def replace(self, **columns) -> "Dataset":
        cols = dict(self.columns)
        cols.update(columns)
        return Dataset(self.schema, cols)

    @classmethod
    def from_records(cls, schema: Schema, records: Iterable[Sequence]) -> "Dataset":
        rows = [tuple(r) for r in records]
        width = len(schema.attributes)
        for i, r in enumerate(rows):
            if len(r) != width:
                raise DataError(f"record {i} has {len(r)} values, schema has {width}")
        cols = {a.name: [r[j] for r in rows] for j, a in enumerate(schema.attributes)}
        return cls(schema, cols)


def _parse_number(text: str, row: int, col: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"unparseable numeric value {text!r} at row {row}, column {col!r}") from None
    if not math.isfinite(v):
        raise DataError(f"non-finite numeric value {text!r} at row {row}, column {col!r}")
    return v


def _read_rows(source) -> tuple[list[str], list[list[str]]]:
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    if hasattr(source, "read"):
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    else:
        with open(source, encoding="utf-8", newline="") as fh:
            text = fh.read()
    try:
        rows = list(csv.reader(io.StringIO(text, newline="")))
    except csv.Error as exc:
        raise DataError(f"malformed CSV: {exc}") from None
    rows = [r for r in rows if r]
    if not rows:
        raise DataError("CSV is empty (no header row)")
    return rows[0], rows[1:]


def load_dataset(source, schema: Schema) -> Dataset:
    """Parse a CSV (path, bytes, or file object) against ``schema``.

    Header columns may appear in any order. Empty cells are rejected; row
    numbers in diagnostics are 1-based data rows (the header is row 0).
    """
    header, body = _read_rows(source)
    names = schema.names
    if len(set(header)) != len(header):
        raise DataError(f"duplicate column names in CSV header: {header}")
    unknown = [h for h in header if h not in names]
    if unknown:
        raise DataError(f"unknown column(s) {unknown}")
    missing = [n for n in names if n not in header]
    if missing:
        raise DataError(f"missing column(s) {missing}")
    pos = {h: j for j, h in enumerate(header)}
    cols: dict[str, list] = {n: [] for n in names}
    for i, row in enumerate(body, start=1):
        if len(row) != len(header):
            raise DataError(f"malformed CSV: row {i} has {len(row)} fields, expected {len(header)}")
        for a in schema.attributes:
            cell = row[pos[a.name]]
            if cell.strip() == "":
                raise DataError(f"missing value at row {i}, column {a.name!r}")
            cols[a.name].append(_parse_number(cell, i, a.name) if a.numeric else cell)
    if not body:
        raise DataError("CSV has a header but no records")
    return Dataset(schema, cols)


def infer_schema(source, class_attribute: str) -> Schema:
    """Numeric iff every value parses as a finite real; the class is always categorical."""
    header, body = _read_rows(source)
    attrs = []
    for j, name in enumerate(header):
        kind = CATEGORICAL
        if name != class_attribute and body:
            try:
                kind = NUMERIC if all(math.isfinite(float(r[j])) for r in body) else CATEGORICAL
            except (ValueError, IndexError):
                kind = CATEGORICAL
        attrs.append(Attribute(name, kind))
    return Schema(tuple(attrs), class_attribute)


def format_value(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def dump_dataset(d: Dataset, dest=None) -> str | None:
    """Write ``d`` as CSV. Floats use ``repr`` so reloading is exact."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(d.schema.names)
    cols = [d.columns[n] for n in d.schema.names]
    for i in range(len(d)):
        w.writerow([format_value(c[i]) for c in cols])
    text = buf.getvalue()
    if dest is None:
        return text
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return None


@dataclass(frozen=True)
class AttributeStats:
    name: str
    kind: str
    # numeric
    min: float | None = None
    max: float | None = None
    variance: float | None = None
    # categorical: the column itself (record order) and its sorted unique values
    values: tuple = ()
    uniques: tuple = ()

    @property
    def counts(self) -> Counter:
        return Counter(self.values)


def attribute_stats(d: Dataset, attribute: str) -> AttributeStats:
    a = d.schema.attribute(attribute)
    if attribute == d.schema.class_attribute:
        raise DataError("statistics are not defined for the class attribute")
    col = d.columns[attribute]
    if a.numeric:
        # population variance (ddof=0)
        return AttributeStats(attribute, a.kind, float(col.min()), float(col.max()),
                              float(np.var(col)))
    return AttributeStats(attribute, a.kind, values=tuple(col.tolist()),
                          uniques=tuple(sorted(set(col.tolist()))))


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignment: tuple
    seed: int

    def fold_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.assignment) == fold)


def stratified_folds(d: Dataset, k: int, seed: int) -> FoldPlan:
    """Stratified k-fold assignment.

    Within each label (sorted label order) records are shuffled with a seeded
    generator and dealt round-robin; the dealing offset carries over between
    labels so overall fold sizes stay balanced too.
    """
    if k < 2:
        raise DataError("k must be at least 2")
    if k > len(d):
        raise DataError(f"k={k} exceeds the number of records ({len(d)})")
    rng = np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), k]))
    labels = d.labels
    assignment = np.empty(len(d), dtype=np.int64)
    offset = 0
    for label in d.label_values():
        idx = np.flatnonzero(labels == label)
        idx = idx[rng.permutation(len(idx))]
        assignment[idx] = (np.arange(len(idx)) + offset) % k
        offset = (offset + len(idx)) % k
    return FoldPlan(k, tuple(int(x) for x in assignment), seed)


def split(d: Dataset, plan: FoldPlan, held_out: int) -> tuple[Dataset, Dataset]:
    if not 0 <= held_out < plan.k:
        raise DataError(f"fold index {held_out} out of range [0, {plan.k})")
    if len(plan.assignment) != len(d):
        raise DataError("fold plan does not match dataset size")
    assign = np.asarray(plan.assignment)
    return d.take(np.flatnonzero(assign != held_out)), d.take(np.flatnonzero(assign == held_out))
