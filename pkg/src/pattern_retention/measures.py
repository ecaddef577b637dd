"""Pattern-retention measures and the classifier baselines they are compared with.

Retention measures compare an original dataset ``d`` with its modified copy
``m`` through a fixed pattern set mined from ``d``:

* pattern accuracy  ``|acc(Z, d) - acc(Z, m)|``
* PSD  mean absolute support change per pattern, normalised by ``len(d)``
* PLD  mean chi-squared histogram distance between per-pattern label mixes

The baselines (prediction accuracy, F-measure, rank AUC) score a pattern set
against a held-out test set.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.stats import rankdata

from .errors import MeasureError, SchemaMismatchError
from .patterns import Pattern, PatternSet, coverage, label_distribution, predict_all
from .tabular import Dataset

PLD_MIN_SUPPORT = 5


def _same_shape(d: Dataset, m: Dataset):
    if d.schema != m.schema:
        raise SchemaMismatchError("original and modified datasets have different schemas")
    if len(d) != len(m):
        raise SchemaMismatchError(
            f"original has {len(d)} records but modified has {len(m)}")


def prediction_accuracy(zs: PatternSet, eval_data: Dataset) -> float:
    if len(eval_data) == 0:
        raise MeasureError("prediction accuracy of an empty dataset")
    pred, _, _ = predict_all(zs, eval_data)
    return float(np.mean(pred == eval_data.labels))


def pattern_accuracy(zs: PatternSet, d: Dataset, m: Dataset) -> tuple[float, float, float]:
    """Returns ``(|alpha_dd - alpha_dm|, alpha_dd, alpha_dm)``."""
    _same_shape(d, m)
    a_dd = prediction_accuracy(zs, d)
    a_dm = prediction_accuracy(zs, m)
    return abs(a_dd - a_dm), a_dd, a_dm


def psd(zs: PatternSet, d: Dataset, m: Dataset) -> float:
    _same_shape(d, m)
    if len(zs) == 0:
        raise MeasureError("PSD needs at least one pattern")
    diffs = [abs(int(coverage(p, d).sum()) - int(coverage(p, m).sum())) for p in zs.patterns]
    return float(sum(diffs)) / (len(zs) * len(d))


def chi2_distance(f_d: dict, f_m: dict) -> float:
    """Chi-squared histogram distance between two relative-frequency maps."""
    total = 0.0
    for y in sorted(set(f_d) | set(f_m)):
        a, b = f_d.get(y, 0.0), f_m.get(y, 0.0)
        if a + b > 0:
            total += (a - b) ** 2 / (a + b)
    return 0.5 * total


def chi2_label_distance(p: Pattern, d: Dataset, m: Dataset) -> float:
    """Distance between the label mix of ``p``'s records in ``d`` and in ``m``.

    A pattern that covers nothing in ``m`` scores 0.5 (all modified
    frequencies are zero)."""
    _same_shape(d, m)
    labels = set(d.labels.tolist()) | set(m.labels.tolist())
    dist_d = label_distribution(p, d, labels)
    if dist_d.total == 0:
        raise MeasureError(f"pattern {p.id} covers no records in the original dataset")
    dist_m = label_distribution(p, m, labels)
    return chi2_distance(dist_d.frequencies, dist_m.frequencies)


class PLDResult(NamedTuple):
    value: float
    included_count: int
    raw: float  # sum over included patterns divided by |Z| (no exclusion in the divisor)


def pld(zs: PatternSet, d: Dataset, m: Dataset, min_support: int = PLD_MIN_SUPPORT) -> PLDResult:
    """Mean chi-squared label distance over patterns with support >= ``min_support`` in ``d``."""
    _same_shape(d, m)
    dists = []
    for p in zs.patterns:  # id order fixes the summation order
        if int(coverage(p, d).sum()) >= min_support:
            dists.append(chi2_label_distance(p, d, m))
    if not dists:
        raise MeasureError(f"no pattern has support >= {min_support} in the original dataset")
    s = float(sum(dists))
    return PLDResult(s / len(dists), len(dists), s / len(zs))


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int
    positive_label: str

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _check_binary(zs: PatternSet, eval_data: Dataset, positive_label):
    labels = set(eval_data.labels.tolist()) | set(zs.labels)
    if len(labels) != 2:
        raise MeasureError(f"binary class required, found labels {sorted(labels)}")
    if positive_label not in labels:
        raise MeasureError(f"unknown positive label {positive_label!r}")


def confusion(zs: PatternSet, eval_data: Dataset, positive_label) -> ConfusionCounts:
    _check_binary(zs, eval_data, positive_label)
    pred, _, _ = predict_all(zs, eval_data)
    pos_pred = pred == positive_label
    pos_true = eval_data.labels == positive_label
    return ConfusionCounts(int(np.sum(pos_pred & pos_true)), int(np.sum(pos_pred & ~pos_true)),
                           int(np.sum(~pos_pred & ~pos_true)), int(np.sum(~pos_pred & pos_true)),
                           positive_label)


def f_measure(c: ConfusionCounts, beta: float = 1.0) -> float:
    """F-beta from confusion counts; 0 when there are no true positives."""
    if c.tp == 0:
        return 0.0
    precision = c.tp / (c.tp + c.fp)
    recall = c.tp / (c.tp + c.fn)
    b2 = beta * beta
    return (1 + b2) * precision * recall / (b2 * precision + recall)


def rank_auc(scores, positives) -> float:
    """Mann-Whitney AUC with mid-ranks for tied scores."""
    scores = np.asarray(scores, dtype=np.float64)
    positives = np.asarray(positives, dtype=bool)
    n_pos = int(positives.sum())
    n_neg = len(positives) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MeasureError("AUC needs both positive and negative records")
    ranks = rankdata(scores, method="average")
    return float((ranks[positives].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def auc(zs: PatternSet, eval_data: Dataset, positive_label) -> float:
    _check_binary(zs, eval_data, positive_label)
    _, scores, _ = predict_all(zs, eval_data, positive_label)
    return rank_auc(scores, eval_data.labels == positive_label)


@dataclass(frozen=True)
class PatternRow:
    pattern_id: int
    support_d: int
    support_m: int
    chi2: float | None  # None when the pattern covers nothing in d
    vanished: bool
    included_in_pld: bool


def per_pattern_report(zs: PatternSet, d: Dataset, m: Dataset,
                       min_support: int = PLD_MIN_SUPPORT) -> list[PatternRow]:
    _same_shape(d, m)
    rows = []
    for p in zs.patterns:
        s_d = int(coverage(p, d).sum())
        s_m = int(coverage(p, m).sum())
        chi = chi2_label_distance(p, d, m) if s_d > 0 else None
        rows.append(PatternRow(p.id, s_d, s_m, chi, s_d > 0 and s_m == 0, s_d >= min_support))
    return rows


@dataclass
class MeasureReport:
    pattern_accuracy_eq1: float
    alpha_dd: float
    alpha_dm: float
    psd: float
    pld: float | None
    pld_raw: float | None
    pld_pattern_count: int
    prediction_accuracy: float | None = None
    f_measure: float | None = None
    auc: float | None = None
    per_pattern: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = asdict(self)
        out["per_pattern"] = [asdict(r) for r in self.per_pattern]
        return out


def evaluate(zs: PatternSet, d: Dataset, m: Dataset, test: Dataset | None = None,
             positive_label=None, min_support: int = PLD_MIN_SUPPORT) -> MeasureReport:
    """All measures for one ``(Z, d, m[, test])`` evaluation.

    PLD is reported as ``None`` (with count 0) when no pattern reaches
    ``min_support``; the baselines are ``None`` without a test set, and
    F-measure/AUC also need a positive label.
    """
    zs.check(d)
    eq1, a_dd, a_dm = pattern_accuracy(zs, d, m)
    try:
        pld_res = pld(zs, d, m, min_support)
    except MeasureError:
        pld_res = PLDResult(None, 0, None)
    report = MeasureReport(eq1, a_dd, a_dm, psd(zs, d, m), pld_res.value, pld_res.raw,
                           pld_res.included_count,
                           per_pattern=per_pattern_report(zs, d, m, min_support))
    if test is not None:
        report.prediction_accuracy = prediction_accuracy(zs, test)
        if positive_label is not None:
            report.f_measure = f_measure(confusion(zs, test, positive_label))
            report.auc = auc(zs, test, positive_label)
    report.metadata = {
        "pld_min_support": min_support,
        "pld_divisor": "included patterns (pld_raw divides by all patterns)",
        "vanished_chi2": 0.5,
        "f_measure_zero_tp": 0.0,
        "auc": "mann-whitney mid-rank; unmatched records scored with the positive-label prior",
        "prediction_conflicts": "confidence desc, support desc, id asc",
        "positive_label": positive_label,
    }
    return report
