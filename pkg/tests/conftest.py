import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pattern_retention.patterns import Condition, Pattern, PatternSet  # noqa: E402
from pattern_retention.tabular import CATEGORICAL, NUMERIC, Attribute, Dataset, Schema  # noqa: E402
from pattern_retention.synth import random_dataset  # noqa: E402

OPS_NUM = ("le", "gt")
OPS_CAT = ("eq", "neq")


@pytest.fixture
def age_hours_schema():
    return Schema((Attribute("Age", NUMERIC), Attribute("Hours", NUMERIC),
                   Attribute("Y", CATEGORICAL)), "Y")


@pytest.fixture
def toy_schema():
    return Schema((Attribute("a", CATEGORICAL), Attribute("b", CATEGORICAL),
                   Attribute("Y", CATEGORICAL)), "Y")


def micro_instance(rng: np.random.Generator, n_labels=None):
    """Random (schema, d, m, test, pattern_set) with at most 8 records, 3
    attributes, 4 patterns, 3 labels. Patterns are random conjunctions
    (possibly overlapping, non-partition)."""
    n_attr = int(rng.integers(1, 4))
    attrs = [Attribute(f"x{j}", NUMERIC if rng.random() < 0.5 else CATEGORICAL) for j in range(n_attr)]
    schema = Schema(tuple(attrs) + (Attribute("Y", CATEGORICAL),), "Y")
    n_labels = n_labels or int(rng.integers(1, 4))
    n = int(rng.integers(1, 9))
    d = random_dataset(rng, schema, n, n_categories=3, n_labels=n_labels, int_range=4)
    m = random_dataset(rng, schema, n, n_categories=3, n_labels=n_labels, int_range=4)
    m = m.replace(Y=d.labels)  # noise never touches labels
    t = random_dataset(rng, schema, int(rng.integers(1, 9)), n_categories=3,
                       n_labels=n_labels, int_range=4)
    patterns = []
    for i in range(int(rng.integers(1, 5))):
        conds = []
        for a in attrs:
            if rng.random() < 0.5:
                continue
            if a.numeric:
                conds.append(Condition(a.name, OPS_NUM[rng.integers(2)], rng.integers(0, 4) - 0.5))
            else:
                conds.append(Condition(a.name, OPS_CAT[rng.integers(2)], f"c{rng.integers(3)}"))
        counts = {f"y{k}": int(rng.integers(0, 5)) for k in range(n_labels)}
        patterns.append(Pattern(i, tuple(conds), counts))
    labels = sorted({f"y{k}" for k in range(n_labels)})
    default = labels[int(rng.integers(len(labels)))]
    zs = PatternSet(tuple(patterns), schema.fingerprint(), default, False)
    return schema, d, m, t, zs


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion; printed in the summary."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def record(label, ok, detail=""):
        lines.append(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
        assert ok, f"{label}: {detail}"
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
