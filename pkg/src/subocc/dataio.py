"""Transaction tables: CSV ingestion, stratified split, resampling and
target-class normalization.

Label convention: 0 is the target (normal) class, 1 is the outlier (fraud)
class.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError

TARGET = 0
OUTLIER = 1

STD_FLOOR = 1e-8


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TransactionTable:
    """An N x D feature matrix with binary labels.

    Arrays are copied and made read-only on construction.
    """

    features: np.ndarray
    labels: np.ndarray
    name: str = ""
    columns: tuple = field(default=())

    def __post_init__(self):
        X = _frozen(self.features, float)
        y = _frozen(self.labels, np.int64)
        if X.ndim == 1:
            X = _frozen(X.reshape(-1, 1), float)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError(
                f"labels length {y.shape[0] if y.ndim else 0} does not match "
                f"{X.shape[0]} feature rows"
            )
        if not np.all(np.isfinite(X)):
            bad = np.argwhere(~np.isfinite(X))[0]
            raise DataError(f"non-finite feature at row {bad[0]}, column {bad[1]}")
        if not np.all((y == TARGET) | (y == OUTLIER)):
            raise DataError("labels must be 0 (target) or 1 (outlier)")
        columns = tuple(self.columns)
        if columns and len(columns) != X.shape[1]:
            raise DataError(f"{len(columns)} column names for {X.shape[1]} features")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "columns", columns)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, idx, name=None) -> "TransactionTable":
        idx = np.asarray(idx, dtype=np.int64)
        return TransactionTable(
            self.features[idx], self.labels[idx], self.name if name is None else name, self.columns
        )

    def class_indices(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)

    @property
    def targets(self) -> "TransactionTable":
        return self.subset(self.class_indices(TARGET))


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", _frozen(self.mean, float))
        object.__setattr__(self, "std", _frozen(self.std, float))
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise DataError("mean and std must be 1-D arrays of equal length")
        if np.any(self.std < STD_FLOOR):
            raise DataError(f"std entries must be >= {STD_FLOOR}")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class ResampleSpec:
    n_target: int
    n_outlier: int
    seed: int = 0

    def __post_init__(self):
        if self.n_target < 1 or self.n_outlier < 0:
            raise DataError("need n_target >= 1 and n_outlier >= 0")


def load_table(
    path,
    label_column: str,
    *,
    drop_columns: Sequence[str] = (),
    feature_columns: Sequence[str] | None = None,
    name: str | None = None,
) -> TransactionTable:
    """Read a comma-separated file with one header row.

    Every column other than ``label_column`` (and ``drop_columns``) becomes a
    feature, in header order, unless ``feature_columns`` selects an explicit
    subset.  Label cells must be exactly ``0`` or ``1``.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file (no header row)") from None
        if label_column not in header:
            raise DataError(f"{path}: label column not found: {label_column!r}")
        label_pos = header.index(label_column)
        if feature_columns is None:
            skip = set(drop_columns) | {label_column}
            for col in drop_columns:
                if col not in header:
                    raise DataError(f"{path}: column to drop not found: {col!r}")
            feat_names = [h for h in header if h not in skip]
        else:
            feat_names = list(feature_columns)
            for col in feat_names:
                if col not in header:
                    raise DataError(f"{path}: feature column not found: {col!r}")
        feat_pos = [header.index(h) for h in feat_names]

        rows, labels = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise DataError(
                    f"{path}: row {lineno} has {len(rec)} cells, header has {len(header)}"
                )
            lab = rec[label_pos].strip()
            if lab not in ("0", "1"):
                raise DataError(
                    f"{path}: row {lineno}, column {label_column!r}: label must be 0 or 1, got {lab!r}"
                )
            vals = []
            for pos in feat_pos:
                cell = rec[pos]
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: row {lineno}, column {header[pos]!r}: non-numeric cell {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(
                        f"{path}: row {lineno}, column {header[pos]!r}: non-finite value {cell!r}"
                    )
                vals.append(v)
            rows.append(vals)
            labels.append(int(lab))
    if not rows:
        raise DataError(f"{path}: no data rows")
    if not feat_names:
        raise DataError(f"{path}: no feature columns")
    return TransactionTable(
        np.array(rows, dtype=float),
        np.array(labels, dtype=np.int64),
        name if name is not None else path.stem,
        tuple(feat_names),
    )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split(table: TransactionTable, test_fraction: float, seed: int):
    """Stratified train/test split.

    Each class contributes ``round_half_up(test_fraction * n_class)`` rows to
    the test set.  A class with at least two rows always keeps one row on each
    side, so extreme fractions degrade to a 1/1 split instead of emptying a
    side.  Row order within each output follows the input order.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    test_idx = []
    for label in (TARGET, OUTLIER):
        idx = table.class_indices(label)
        n = idx.size
        if n == 0:
            continue
        n_test = _round_half_up(test_fraction * n)
        if n >= 2:
            n_test = min(max(n_test, 1), n - 1)
        test_idx.append(rng.permutation(idx)[:n_test])
    test_idx = np.sort(np.concatenate(test_idx)) if test_idx else np.empty(0, np.int64)
    mask = np.zeros(table.n_rows, bool)
    mask[test_idx] = True
    return (
        table.subset(np.flatnonzero(~mask), name=table.name),
        table.subset(test_idx, name=table.name),
    )


def resample(train: TransactionTable, spec: ResampleSpec) -> TransactionTable:
    """Uniform sampling without replacement of the requested per-class counts."""
    rng = np.random.default_rng(spec.seed)
    picked = []
    for label, count in ((TARGET, spec.n_target), (OUTLIER, spec.n_outlier)):
        idx = train.class_indices(label)
        if count > idx.size:
            kind = "target" if label == TARGET else "outlier"
            raise DataError(
                f"requested {count} {kind} rows but only {idx.size} are available"
            )
        picked.append(rng.choice(idx, size=count, replace=False))
    return train.subset(np.sort(np.concatenate(picked)))


def fit_norm_stats(table: TransactionTable) -> NormStats:
    X = table.features[table.labels == TARGET]
    if X.shape[0] < 2:
        raise DataError(f"need at least 2 target rows for normalization, got {X.shape[0]}")
    std = np.maximum(X.std(axis=0, ddof=1), STD_FLOOR)
    return NormStats(X.mean(axis=0), std)


def _check_dim(X, stats):
    if X.shape[-1] != stats.dim:
        raise DataError(f"dimension mismatch: data has {X.shape[-1]} features, stats have {stats.dim}")


def normalize_array(X, stats: NormStats) -> np.ndarray:
    X = np.asarray(X, float)
    _check_dim(X, stats)
    return (X - stats.mean) / stats.std


def denormalize_array(Z, stats: NormStats) -> np.ndarray:
    Z = np.asarray(Z, float)
    _check_dim(Z, stats)
    return Z * stats.std + stats.mean


def normalize(table: TransactionTable, stats: NormStats) -> TransactionTable:
    return TransactionTable(
        normalize_array(table.features, stats), table.labels, table.name, table.columns
    )
