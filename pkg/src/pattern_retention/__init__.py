"""Measure how well a modified dataset retains the patterns of its original."""

__version__ = "0.1.0"

from .cart import MinerParams, gini, mine_patterns  # noqa: E402
from .measures import (  # noqa: E402
    MeasureReport,
    auc,
    chi2_label_distance,
    confusion,
    evaluate,
    f_measure,
    pattern_accuracy,
    per_pattern_report,
    pld,
    prediction_accuracy,
    psd,
)
from .noise import NoiseSpec, perturb  # noqa: E402
from .patterns import Condition, Pattern, PatternSet, parse_patterns, serialize_patterns  # noqa: E402
from .tabular import Attribute, Dataset, Schema, load_dataset, stratified_folds, split  # noqa: E402
