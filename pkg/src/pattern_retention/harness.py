"""Noise-sweep experiments: repeated stratified CV over a grid of noise levels.

For each (repeat, fold) the training part is the original dataset ``D`` and the
held-out fold is the test set ``T``. A pattern set is mined from ``D``; then for
every (noise kind, p) a noisy copy ``M`` is drawn, a second pattern set is
mined from ``M``, and all measures are recorded in a long-form table.

Seeds are derived from ``master_seed`` with the same SplitMix64 folding the
noise engine uses:

    fold plan for repeat r          derive_seed(master, 0, r)
    noise for (kind, p, r, fold)    derive_seed(master, 1, kind_index, p_index, r, fold)
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import betainc

from . import __version__
from .cart import MinerParams, mine_patterns
from .errors import DataError, MeasureError
from .measures import auc, confusion, f_measure, pattern_accuracy, pld, prediction_accuracy, psd
from .noise import GN, RNG_NAME, UN, NoiseSpec, _mix, perturb
from .tabular import Dataset, load_dataset, load_schema, split, stratified_folds

RETENTION_MEASURES = ("pattern_accuracy", "alpha_dm", "psd", "pld")
BASELINE_MEASURES = ("prediction_accuracy", "auc", "f_measure")
# correlated by default; zd_prediction_accuracy is constant across p
CORRELATED = RETENTION_MEASURES + BASELINE_MEASURES


class ExperimentError(RuntimeError):
    pass


def derive_seed(master: int, *parts: int) -> int:
    h = _mix(np.uint64(master & 0xFFFFFFFFFFFFFFFF))
    for part in parts:
        h = _mix(h ^ np.uint64(part & 0xFFFFFFFFFFFFFFFF))
    return int(h)


def parse_grid(text: str) -> list[float]:
    """``"0:0.30:0.02"`` (inclusive range) or a comma list ``"0,0.1,0.2"``."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        count = int(round((stop - start) / step)) + 1
        return [round(start + i * step, 10) for i in range(count)]
    return [float(x) for x in text.split(",") if x.strip()]


def default_grid() -> list[float]:
    return parse_grid("0:0.30:0.02")


@dataclass
class ExperimentConfig:
    data_path: str | None = None
    schema_path: str | None = None
    noise_kinds: tuple = (UN, GN)
    p_grid: list = field(default_factory=default_grid)
    folds: int = 10
    repeats: int = 10
    master_seed: int = 0
    miner: MinerParams = field(default_factory=MinerParams)
    positive_label: str | None = None
    workers: int = 1

    def __post_init__(self):
        self.noise_kinds = tuple(k.upper() for k in self.noise_kinds)
        if not self.noise_kinds or any(k not in (UN, GN) for k in self.noise_kinds):
            raise ValueError(f"noise kinds must be drawn from UN, GN: {self.noise_kinds}")
        grid = [float(p) for p in self.p_grid]
        if any(not 0 <= p <= 1 for p in grid):
            raise ValueError("p_grid values must lie in [0, 1]")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("p_grid must be strictly increasing")
        if 0.0 not in grid:
            raise ValueError("p_grid must contain 0.0")
        self.p_grid = grid
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")

    @property
    def measures(self) -> tuple:
        base = RETENTION_MEASURES + ("prediction_accuracy", "zd_prediction_accuracy")
        if self.positive_label is not None:
            base += ("auc", "f_measure", "zd_auc", "zd_f_measure")
        return base

    def echo(self) -> dict:
        out = asdict(self)
        out["miner"] = asdict(self.miner)
        out["noise_kinds"] = list(self.noise_kinds)
        return out


@dataclass
class ResultTable:
    rows: list  # (noise_kind, p, repeat, fold, measure, value)
    metadata: dict = field(default_factory=dict)

    COLUMNS = ("noise_kind", "p", "repeat", "fold", "measure", "value")

    def sorted(self) -> "ResultTable":
        return ResultTable(sorted(self.rows, key=lambda r: r[:5]), dict(self.metadata))

    def values(self, noise_kind, measure) -> dict:
        return {(r[1], r[2], r[3]): r[5] for r in self.rows
                if r[0] == noise_kind and r[4] == measure}

    @property
    def measures(self) -> list:
        seen = []
        for r in self.rows:
            if r[4] not in seen:
                seen.append(r[4])
        return seen

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for kind, p, rep, fold, name, value in self.rows:
            w.writerow([kind, repr(float(p)), rep, fold, name, repr(float(value))])
        return buf.getvalue()

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())
        with open(str(path) + ".meta.json", "w", encoding="utf-8") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True, default=str)

    @classmethod
    def read(cls, path) -> "ResultTable":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != cls.COLUMNS:
                raise DataError(f"results file must have columns {','.join(cls.COLUMNS)}")
            rows = [(r["noise_kind"], float(r["p"]), int(r["repeat"]), int(r["fold"]),
                     r["measure"], float(r["value"])) for r in reader]
        meta = {}
        try:
            with open(str(path) + ".meta.json", encoding="utf-8") as fh:
                meta = json.load(fh)
        except FileNotFoundError:
            pass
        return cls(rows, meta)


def _baselines(zs, test, positive_label, prefix=""):
    out = {prefix + "prediction_accuracy": prediction_accuracy(zs, test)}
    if positive_label is not None:
        out[prefix + "auc"] = auc(zs, test, positive_label)
        out[prefix + "f_measure"] = f_measure(confusion(zs, test, positive_label))
    return out


def _run_unit(config: ExperimentConfig, data: Dataset, repeat: int, fold: int, plan) -> list:
    train, test = split(data, plan, fold)
    rows = []
    z_d = mine_patterns(train, config.miner)
    zd_base = _baselines(z_d, test, config.positive_label, prefix="zd_")
    for ki, kind in enumerate(config.noise_kinds):
        for pi, p in enumerate(config.p_grid):
            where = f"(noise={kind}, p={p}, repeat={repeat}, fold={fold})"
            try:
                seed = derive_seed(config.master_seed, 1, ki, pi, repeat, fold)
                m = perturb(train, NoiseSpec(kind, p, seed))
                eq1, _, a_dm = pattern_accuracy(z_d, train, m)
                vals = {"pattern_accuracy": eq1, "alpha_dm": a_dm, "psd": psd(z_d, train, m),
                        "pld": pld(z_d, train, m).value}
                # p = 0 leaves M identical to D, so mining it again would reproduce z_d
                z_m = z_d if p == 0.0 else mine_patterns(m, config.miner)
                vals.update(_baselines(z_m, test, config.positive_label))
                vals.update(zd_base)
            except (DataError, ValueError) as exc:
                raise ExperimentError(f"{where}: {exc}") from exc
            for name in config.measures:
                rows.append((kind, p, repeat, fold, name, float(vals[name])))
    return rows


def _run_repeat(args):
    config, data, repeat = args
    plan = stratified_folds(data, config.folds, derive_seed(config.master_seed, 0, repeat))
    rows = []
    for fold in range(config.folds):
        rows.extend(_run_unit(config, data, repeat, fold, plan))
    return rows


def run_experiment(config: ExperimentConfig, data: Dataset | None = None) -> ResultTable:
    """Run the full sweep. Output is identical for any ``config.workers``."""
    if data is None:
        if not (config.data_path and config.schema_path):
            raise ValueError("config needs data_path and schema_path when no dataset is given")
        data = load_dataset(config.data_path, load_schema(config.schema_path))
    jobs = [(config, data, r) for r in range(config.repeats)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            parts = list(ex.map(_run_repeat, jobs))
    else:
        parts = [_run_repeat(j) for j in jobs]
    rows = [row for part in parts for row in part]
    meta = {
        "tool_version": __version__,
        "config": config.echo(),
        "records": len(data),
        "schema_fingerprint": data.schema.fingerprint(),
        "rng": RNG_NAME,
        "seed_derivation": "folds: derive_seed(master,0,repeat); "
                           "noise: derive_seed(master,1,kind_idx,p_idx,repeat,fold)",
        "variance": "population",
        "folds": "stratified by class label",
        "baselines": "prediction_accuracy/auc/f_measure use a pattern set mined from M, "
                     "zd_* use the pattern set mined from D; both scored on the held-out fold",
        "pattern_accuracy": "|alpha(Z_D|D) - alpha(Z_D|M)|; alpha_dm is the raw alpha(Z_D|M)",
    }
    return ResultTable(rows, meta).sorted()


def delta_normalize(t: ResultTable) -> ResultTable:
    """Subtract each (kind, repeat, fold, measure) group's zero-noise value."""
    base = {(r[0], r[2], r[3], r[4]): r[5] for r in t.rows if r[1] == 0.0}
    out = []
    for r in t.rows:
        key = (r[0], r[2], r[3], r[4])
        if key not in base:
            raise DataError(f"no p = 0 baseline for {key}")
        out.append(r[:5] + (r[5] - base[key],))
    meta = dict(t.metadata)
    meta["delta_normalized"] = True
    return ResultTable(out, meta)


def pearson(x, y) -> tuple[float, float]:
    """Pearson r and its two-sided p-value (Student t with n - 2 df)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("series must be one-dimensional and of equal length")
    n = len(x)
    if n < 3:
        raise ValueError("pearson needs at least 3 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ValueError("correlation is undefined for a constant series")
    sxy = float(dx @ dy)
    r = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    df = n - 2
    # 1 - r^2 from the regression residuals; subtracting r*r from 1 loses
    # every significant digit when the series are (nearly) collinear
    resid = dy - (sxy / sxx) * dx
    unexplained = min(1.0, float(resid @ resid) / syy)
    # P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2), and df/(df+t^2) = 1 - r^2
    return r, float(betainc(df / 2.0, 0.5, unexplained))


@dataclass
class CorrelationMatrix:
    noise_kind: str
    measures: list
    r: np.ndarray
    p_value: np.ndarray
    n: int

    def rows(self):
        for i, a in enumerate(self.measures):
            for j, b in enumerate(self.measures):
                yield self.noise_kind, a, b, float(self.r[i, j]), float(self.p_value[i, j]), self.n

    def get(self, a, b) -> tuple[float, float]:
        i, j = self.measures.index(a), self.measures.index(b)
        return float(self.r[i, j]), float(self.p_value[i, j])


def aggregate(t: ResultTable, noise_kind, measures, by_p: bool = True) -> tuple[list, dict]:
    """Series per measure: mean over (repeat, fold) per p, or every cell."""
    points = sorted({(r[1],) if by_p else r[1:4] for r in t.rows if r[0] == noise_kind})
    series = {}
    for name in measures:
        acc = defaultdict(list)
        for r in t.rows:
            if r[0] == noise_kind and r[4] == name:
                acc[(r[1],) if by_p else r[1:4]].append(r[5])
        if set(acc) != set(points):
            raise DataError(f"measure {name!r} is missing cells for noise kind {noise_kind}")
        series[name] = [float(np.mean(acc[k])) for k in points]
    return points, series


def correlation_matrix(t: ResultTable, noise_kind, measures=None, by_p: bool = True) -> CorrelationMatrix:
    """Pairwise Pearson correlations between measures for one noise kind.

    Pairs involving a constant series get NaN for both r and p.
    """
    available = t.measures
    measures = [m for m in (measures or CORRELATED) if m in available]
    points, series = aggregate(t, noise_kind, measures, by_p)
    if len(points) < 3:
        raise DataError(f"need at least 3 aggregated points, have {len(points)}")
    k = len(measures)
    r = np.full((k, k), np.nan)
    pv = np.full((k, k), np.nan)
    for i in range(k):
        for j in range(i, k):
            try:
                if i == j:
                    pearson(series[measures[i]], series[measures[i]])  # raises if constant
                    r[i, i], pv[i, i] = 1.0, 0.0
                else:
                    r[i, j], pv[i, j] = pearson(series[measures[i]], series[measures[j]])
                    r[j, i], pv[j, i] = r[i, j], pv[i, j]
            except ValueError:
                pass
    return CorrelationMatrix(noise_kind, measures, r, pv, len(points))


def write_correlations(mats, dest):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("noise_kind", "measure_a", "measure_b", "r", "p_value", "n"))
    for mat in mats:
        for row in mat.rows():
            w.writerow(row)
    if hasattr(dest, "write"):
        dest.write(buf.getvalue())
    else:
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
