"""Metrics, one-class cross-validation, grid search and benchmark reports.

Precision and F1 treat the normal (target) class as positive.  Outlier rows
of a training pool are never used for fitting; they only join the
validation folds so that a G-mean can be computed during cross-validation.
"""
from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataio import (
    OUTLIER,
    TARGET,
    NormStats,
    ResampleSpec,
    TransactionTable,
    fit_norm_stats,
    resample,
    split,
)
from .errors import DataError, OccError, UsageError
from .subspace import TrainConfig, predict, train
from .variants import ModelSpec

log = logging.getLogger(__name__)

DEFAULT_GRID = {
    "C": (0.1, 0.2, 0.3, 0.4, 0.5),
    "d": (1, 2, 3, 4, 5, 10, 20),
    "beta": (0.01, 0.1, 1.0, 10.0, 100.0),
    "eta": (0.1, 1.0, 10.0, 100.0, 1000.0),
    "sigma": (0.1, 1.0, 10.0, 100.0, 1000.0),
}


# ---------------------------------------------------------------- metrics


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise DataError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_labels(cls, y_true, y_pred) -> "ConfusionCounts":
        y_true = np.asarray(y_true)
        y_pred = np.asarray(y_pred)
        if y_true.shape != y_pred.shape:
            raise DataError("label arrays differ in shape")
        t_norm, p_norm = y_true == TARGET, y_pred == TARGET
        return cls(
            int(np.sum(t_norm & p_norm)),
            int(np.sum(~t_norm & p_norm)),
            int(np.sum(~t_norm & ~p_norm)),
            int(np.sum(t_norm & ~p_norm)),
        )


def _ratio(a, b):
    return a / b if b else 0.0


def metrics(counts: ConfusionCounts):
    """(precision, f1, gmean); any zero denominator yields 0.

    F1 and G-mean are evaluated from the integer counts directly
    (2tp / (2tp + fp + fn) and sqrt(tp tn / ((tp + fn)(tn + fp)))), which
    equals the precision/recall forms but rounds only once.
    """
    tp, fp, tn, fn = counts.tp, counts.fp, counts.tn, counts.fn
    precision = _ratio(tp, tp + fp)
    f1 = _ratio(2 * tp, 2 * tp + fp + fn)
    return precision, f1, math.sqrt(_ratio(tp * tn, (tp + fn) * (tn + fp)))


def gmean(y_true, y_pred) -> float:
    return metrics(ConfusionCounts.from_labels(y_true, y_pred))[2]


# ---------------------------------------------------------------- cross-validation


@dataclass(frozen=True)
class Fold:
    fit_idx: np.ndarray
    val_idx: np.ndarray


def cv_splits(train_table: TransactionTable, k: int = 5, seed: int = 0) -> list:
    """k folds over the target rows; every validation set also gets all outliers."""
    targets = train_table.class_indices(TARGET)
    outliers = train_table.class_indices(OUTLIER)
    if outliers.size == 0:
        raise DataError("G-mean undefined without negatives in validation: no outlier rows in training pool")
    if k < 2 or targets.size < k:
        raise DataError(f"need at least k={k} >= 2 target rows, have {targets.size}")
    perm = np.random.default_rng(seed).permutation(targets)
    folds = []
    for chunk in np.array_split(perm, k):
        held = np.sort(chunk)
        fit = np.setdiff1d(targets, held)
        folds.append(Fold(fit, np.sort(np.concatenate([held, outliers]))))
    return folds


# ---------------------------------------------------------------- grid search


def expand_grid(spec: ModelSpec, grid=None, n_features=None, base=None) -> list:
    """Configurations for ``spec`` in lattice order.

    Only axes that affect the family are varied: d and eta for subspace
    models (eta only with the gradient solver), beta only for SSVDD with a
    nonzero regularizer variant, sigma only for kernelized models.  For
    linear subspace models d values above ``n_features`` are dropped.
    ``base`` supplies the remaining TrainConfig fields.
    """
    g = dict(DEFAULT_GRID)
    g.update(grid or {})
    base = dict(base or {})
    axes = {"C": g["C"]}
    if spec.is_subspace:
        ds = list(g["d"])
        if n_features is not None and not spec.kernel:
            ds = [d for d in ds if d <= n_features]
        if not ds:
            raise UsageError(f"no d value in {list(g['d'])} fits {n_features} features")
        axes["d"] = ds
        if spec.solver == "gradient":
            axes["eta"] = g["eta"]
        if spec.family == "ssvdd" and spec.psi != 0:
            axes["beta"] = g["beta"]
    if spec.kernel:
        axes["sigma"] = g["sigma"]
    names = list(axes)
    out = []
    for values in itertools.product(*(axes[n] for n in names)):
        kw = dict(base)
        kw.update(zip(names, values))
        if "d" in kw:
            kw["d"] = int(kw["d"])
        out.append(TrainConfig(spec, **kw))
    return out


@dataclass
class CvRecord:
    config: TrainConfig
    fold_gmeans: list
    mean: float
    error: str = ""


@dataclass
class GridResult:
    best: TrainConfig
    best_mean: float
    table: list = field(default_factory=list)


def _eval_fold(args):
    pool, fold, configs, norm = args
    fit_tab = pool.subset(fold.fit_idx)
    val_tab = pool.subset(fold.val_idx)
    cache = {}
    out = []
    for cfg in configs:
        try:
            model = train(cfg, fit_tab, norm, cache=cache)
            _, labels = predict(model, val_tab)
            out.append((gmean(val_tab.labels, labels), ""))
        except (OccError, ValueError, ArithmeticError) as exc:
            out.append((float("nan"), f"{type(exc).__name__}: {exc}"))
    return out


def _threads() -> int:
    try:
        return max(0, int(os.environ.get("OCC_THREADS", "0")))
    except ValueError:
        raise UsageError("OCC_THREADS must be an integer") from None


def grid_search(pool: TransactionTable, configs, seed: int = 0, norm: NormStats | None = None, k: int = 5) -> GridResult:
    """Pick the configuration with the highest mean validation G-mean.

    Ties go to smaller d, then smaller C, then earlier lattice position.
    """
    configs = list(configs)
    if not configs:
        raise UsageError("empty configuration grid")
    if norm is None:
        norm = fit_norm_stats(pool)
    folds = cv_splits(pool, k, seed)
    jobs = [(pool, f, configs, norm) for f in folds]
    n_workers = _threads()
    if n_workers > 0:
        with ProcessPoolExecutor(max_workers=n_workers) as ex:
            per_fold = list(ex.map(_eval_fold, jobs))
    else:
        per_fold = [_eval_fold(j) for j in jobs]

    table = []
    for ci, cfg in enumerate(configs):
        scores = [per_fold[fi][ci][0] for fi in range(len(folds))]
        errors = [per_fold[fi][ci][1] for fi in range(len(folds)) if per_fold[fi][ci][1]]
        mean = float("nan") if errors else float(np.mean(scores))
        table.append(CvRecord(cfg, scores, mean, errors[-1] if errors else ""))

    ok = [(i, r) for i, r in enumerate(table) if not r.error]
    if not ok:
        raise OccError(f"all {len(table)} configurations failed; last error: {table[-1].error}")
    bi, best = min(
        ok,
        key=lambda ir: (-ir[1].mean, ir[1].config.d if ir[1].config.spec.is_subspace else 0, ir[1].config.C, ir[0]),
    )
    return GridResult(best.config, best.mean, table)


# ---------------------------------------------------------------- benchmark


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    table: TransactionTable
    resample: ResampleSpec | None = None


@dataclass
class ReportRow:
    model: str
    dataset: str
    precision: float
    f1: float
    gmean: float
    status: str = "ok"
    params: dict = field(default_factory=dict)
    best: bool = False


@dataclass
class EvalReport:
    rows: list
    datasets: list
    models: list

    def cell(self, model, dataset):
        for r in self.rows:
            if r.model == model and r.dataset == dataset:
                return r
        return None

    def averages(self) -> dict:
        """Average of G-means per model over exactly ``self.datasets``."""
        out = {}
        for m in self.models:
            vals = [self.cell(m, d).gmean for d in self.datasets]
            out[m] = float(np.mean(vals)) if vals else float("nan")
        return out

    @property
    def failed(self) -> bool:
        return any(r.status != "ok" for r in self.rows)


def mark_best(rows, datasets):
    for d in datasets:
        vals = [r.gmean for r in rows if r.dataset == d and r.status == "ok"]
        if not vals:
            continue
        top = max(vals)
        for r in rows:
            if r.dataset == d and r.status == "ok" and r.gmean == top:
                r.best = True


def run_benchmark(specs, datasets, seed: int = 0, grid=None, base=None, folds: int = 5,
                  test_fraction: float = 0.3, audit=None) -> EvalReport:
    """Full protocol per (model, dataset) cell.

    split -> normalization statistics from the pre-resampling training
    targets -> resample -> grid search by CV G-mean -> refit on all
    resampled targets -> score the test split.  A failing cell is recorded
    with ``status`` set to the error and does not stop the run.  When
    ``audit`` is a dict it receives the CV table of every cell.
    """
    specs = list(specs)
    if not specs:
        raise UsageError("no models specified")
    rows = []
    for entry in datasets:
        train_split, test_split = split(entry.table, test_fraction, seed)
        norm = fit_norm_stats(train_split)
        pool = resample(train_split, entry.resample) if entry.resample else train_split
        for spec in specs:
            name = spec.display_name
            log.info("phase=benchmark model=%s dataset=%s", spec.name, entry.name)
            try:
                configs = expand_grid(spec, grid, pool.n_features, base)
                res = grid_search(pool, configs, seed, norm, folds)
                model = train(res.best, pool.targets, norm)
                _, labels = predict(model, test_split)
                p, f1, gm = metrics(ConfusionCounts.from_labels(test_split.labels, labels))
                rows.append(ReportRow(name, entry.name, p, f1, gm, "ok", res.best.describe()))
                if audit is not None:
                    audit[(spec.name, entry.name)] = res
            except (OccError, ValueError, ArithmeticError) as exc:
                log.warning("phase=benchmark model=%s dataset=%s error=%s", spec.name, entry.name, exc)
                rows.append(ReportRow(name, entry.name, float("nan"), float("nan"), float("nan"),
                                      f"{type(exc).__name__}: {exc}"))
    names = [d.name for d in datasets]
    mark_best(rows, names)
    return EvalReport(rows, names, [s.display_name for s in specs])


# ---------------------------------------------------------------- rendering


def _fmt(x):
    return "nan" if not math.isfinite(x) else f"{x:.6f}"


def report_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "dataset", "precision", "f1", "gmean", "best", "status", "params"])
    for r in report.rows:
        params = ";".join(f"{k}={v}" for k, v in r.params.items())
        w.writerow([r.model, r.dataset, _fmt(r.precision), _fmt(r.f1), _fmt(r.gmean),
                    int(r.best), r.status, params])
    return buf.getvalue()


def averages_csv(report: EvalReport) -> str:
    avg = report.averages()
    top = max((v for v in avg.values() if math.isfinite(v)), default=None)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "avg_gmean", "best"])
    for m in report.models:
        w.writerow([m, _fmt(avg[m]), int(top is not None and avg[m] == top)])
    return buf.getvalue()


def format_table(report: EvalReport) -> str:
    """Wide text table: Pre / F1 / G-m per dataset plus the average column.

    The best G-mean per dataset carries a trailing ``*``.
    """
    avg = report.averages()
    head = ["Model"]
    for d in report.datasets:
        head += [f"{d}:Pre", f"{d}:F1", f"{d}:G-m"]
    head.append("Avg of G-means")
    lines = [head]
    for m in report.models:
        line = [m]
        for d in report.datasets:
            r = report.cell(m, d)
            if r is None or r.status != "ok":
                line += ["fail", "fail", "fail"]
            else:
                line += [f"{r.precision:.3f}", f"{r.f1:.3f}", f"{r.gmean:.3f}" + ("*" if r.best else "")]
        line.append("nan" if not math.isfinite(avg[m]) else f"{avg[m]:.3f}")
        lines.append(line)
    widths = [max(len(row[i]) for row in lines) for i in range(len(head))]
    return "\n".join(
        "  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths)))
        for row in lines
    ) + "\n"


def read_report_csv(text: str) -> EvalReport:
    rows, datasets, models = [], [], []
    for rec in csv.DictReader(io.StringIO(text)):
        params = dict(p.split("=", 1) for p in rec["params"].split(";") if p)
        rows.append(ReportRow(rec["model"], rec["dataset"], float(rec["precision"]), float(rec["f1"]),
                              float(rec["gmean"]), rec["status"], params, rec["best"] == "1"))
        if rec["dataset"] not in datasets:
            datasets.append(rec["dataset"])
        if rec["model"] not in models:
            models.append(rec["model"])
    return EvalReport(rows, datasets, models)
