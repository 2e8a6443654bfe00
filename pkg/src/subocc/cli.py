"""Command-line pipeline: ingest, resample/normalize, grid search, evaluate,
report.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure
(including benchmark cells that failed).

The run configuration is a flat ``key = value`` file::

    seed = 0
    models = gessvdd-knn-g-min, svdd, svdd-rbf     # or: all60
    dataset.d1.path = creditcard.csv
    dataset.d1.label = Class
    dataset.d1.drop = Time
    dataset.d1.n_target = 2800
    dataset.d1.n_outlier = 344
    grid.C = 0.1, 0.2, 0.3, 0.4, 0.5
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataio import ResampleSpec, fit_norm_stats, load_table, resample, split
from .errors import DataError, NumericalError, OccError, UsageError
from .evaluation import (
    DatasetEntry,
    averages_csv,
    expand_grid,
    format_table,
    grid_search,
    read_report_csv,
    report_csv,
    run_benchmark,
)
from .persistence import load_model, save_model
from .subspace import train
from .variants import expand_model_list, parse_spec

log = logging.getLogger("subocc")

GRID_KEYS = ("C", "d", "beta", "eta", "sigma")
BASE_KEYS = {"iterations": int, "k": int, "ridge": float, "tol": float, "max_iter": int}


@dataclass
class DatasetConfig:
    name: str
    path: Path
    label: str = "label"
    drop: tuple = ()
    columns: tuple | None = None
    n_target: int | None = None
    n_outlier: int | None = None


@dataclass
class RunConfig:
    seed: int
    datasets: list
    models: list = field(default_factory=list)
    grid: dict = field(default_factory=dict)
    base: dict = field(default_factory=dict)
    folds: int = 5
    test_fraction: float = 0.3
    out: Path | None = None


def _split_list(value: str) -> list:
    return [v.strip() for v in value.split(",") if v.strip()]


def parse_config_text(text: str, root: Path = Path(".")) -> RunConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key] = value

    def num(key, conv, value):
        try:
            return conv(value)
        except ValueError:
            raise UsageError(f"config key {key!r}: cannot parse {value!r}") from None

    datasets, models, grid, base = {}, [], {}, {}
    seed = None
    folds, test_fraction, out = 5, 0.3, None
    for key, value in raw.items():
        if key == "seed":
            seed = num(key, int, value)
        elif key == "models":
            models = _split_list(value)
        elif key == "folds":
            folds = num(key, int, value)
        elif key == "test_fraction":
            test_fraction = num(key, float, value)
        elif key == "out":
            out = root / value
        elif key.startswith("grid."):
            axis = key[5:]
            if axis not in GRID_KEYS:
                raise UsageError(f"unknown grid axis {axis!r}")
            conv = int if axis == "d" else float
            grid[axis] = tuple(num(key, conv, v) for v in _split_list(value))
        elif key in BASE_KEYS:
            base[key] = num(key, BASE_KEYS[key], value)
        elif key.startswith("dataset."):
            parts = key.split(".")
            if len(parts) != 3:
                raise UsageError(f"bad dataset key {key!r}; expected dataset.<name>.<field>")
            _, name, fld = parts
            ds = datasets.setdefault(name, DatasetConfig(name, Path()))
            if fld == "path":
                ds.path = root / value
            elif fld == "label":
                ds.label = value
            elif fld == "drop":
                ds.drop = tuple(_split_list(value))
            elif fld == "columns":
                ds.columns = tuple(_split_list(value))
            elif fld in ("n_target", "n_outlier"):
                setattr(ds, fld, num(key, int, value))
            else:
                raise UsageError(f"unknown dataset field {fld!r}")
        else:
            raise UsageError(f"unknown config key {key!r}")
    if seed is None:
        raise UsageError("config must set 'seed'")
    for ds in datasets.values():
        if ds.path == Path():
            raise UsageError(f"dataset {ds.name!r} has no path")
        if (ds.n_target is None) != (ds.n_outlier is None):
            raise UsageError(f"dataset {ds.name!r}: set both n_target and n_outlier or neither")
    return RunConfig(seed, list(datasets.values()), models, grid, base, folds, test_fraction, out)


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file not found: {p}")
    return parse_config_text(p.read_text(encoding="utf-8"), p.parent)


def _load_entries(cfg: RunConfig, seed: int) -> list:
    entries = []
    for ds in cfg.datasets:
        table = load_table(ds.path, ds.label, drop_columns=ds.drop, feature_columns=ds.columns, name=ds.name)
        rs = None if ds.n_target is None else ResampleSpec(ds.n_target, ds.n_outlier, seed)
        log.info("phase=ingest dataset=%s rows=%d features=%d outliers=%d",
                 ds.name, table.n_rows, table.n_features, int(table.labels.sum()))
        entries.append(DatasetEntry(ds.name, table, rs))
    return entries


def _out_dir(args, cfg) -> Path:
    out = Path(args.out) if args.out else cfg.out
    if out is None:
        raise UsageError("no output directory: pass --out or set 'out' in the config")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(args, cfg) -> int:
    return cfg.seed if args.seed is None else args.seed


def _cv_table_csv(result, path: Path):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "params", "fold_gmeans", "mean_gmean", "selected", "error"])
        for i, rec in enumerate(result.table):
            params = ";".join(f"{k}={v}" for k, v in rec.config.describe().items())
            folds = ";".join("nan" if not np.isfinite(g) else f"{g:.6f}" for g in rec.fold_gmeans)
            mean = "nan" if not np.isfinite(rec.mean) else f"{rec.mean:.6f}"
            w.writerow([i, params, folds, mean, int(rec.config == result.best), rec.error])


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if not args.model:
        raise UsageError("train needs --model <spec>")
    spec = parse_spec(args.model)
    seed = _seed(args, cfg)
    out = _out_dir(args, cfg)
    entries = _load_entries(cfg, seed)
    if not entries:
        raise UsageError("config defines no datasets")
    if args.dataset:
        entries = [e for e in entries if e.name == args.dataset]
        if not entries:
            raise UsageError(f"unknown dataset {args.dataset!r}")
    entry = entries[0]
    train_split, _ = split(entry.table, cfg.test_fraction, seed)
    norm = fit_norm_stats(train_split)
    pool = resample(train_split, entry.resample) if entry.resample else train_split
    configs = expand_grid(spec, cfg.grid, pool.n_features, cfg.base)
    log.info("phase=grid model=%s dataset=%s configs=%d", spec.name, entry.name, len(configs))
    result = grid_search(pool, configs, seed, norm, cfg.folds)
    model = train(result.best, pool.targets, norm)
    stem = f"{spec.name}__{entry.name}"
    model_path = out / f"{stem}.model.json"
    cv_path = out / f"{stem}.cv.csv"
    save_model(model, model_path)
    _cv_table_csv(result, cv_path)
    params = " ".join(f"{k}={v}" for k, v in result.best.describe().items())
    print(f"model={spec.name} dataset={entry.name} {params} cv_gmean={result.best_mean:.6f}")
    print(f"model_file={model_path}")
    print(f"cv_table={cv_path}")
    return 0


def _write_report(report, out: Path, stem: str):
    (out / f"{stem}.csv").write_text(report_csv(report), encoding="utf-8")
    (out / f"{stem}_avg.csv").write_text(averages_csv(report), encoding="utf-8")
    (out / f"{stem}.txt").write_text(format_table(report), encoding="utf-8")


def cmd_benchmark(args) -> int:
    cfg = load_config(args.config)
    specs = expand_model_list(cfg.models)
    if not specs:
        raise UsageError("no models specified")
    if not cfg.datasets:
        raise UsageError("config defines no datasets")
    seed = _seed(args, cfg)
    out = _out_dir(args, cfg)
    entries = _load_entries(cfg, seed)
    log.info("phase=benchmark variants=%d datasets=%d", len(specs), len(entries))
    audit_dir = out / "audit"
    audit_dir.mkdir(exist_ok=True)
    failed = False
    for stem, group in (("linear", [s for s in specs if not s.kernel]), ("kernel", [s for s in specs if s.kernel])):
        if not group:
            continue
        audit = {}
        report = run_benchmark(group, entries, seed, cfg.grid, cfg.base, cfg.folds, cfg.test_fraction, audit)
        _write_report(report, out, stem)
        for (model_name, ds_name), res in sorted(audit.items()):
            _cv_table_csv(res, audit_dir / f"{model_name}__{ds_name}.csv")
        failed = failed or report.failed
        print(format_table(report), end="")
    return 3 if failed else 0


def _feature_positions(header, model):
    D = model.input_dim
    if model.columns and all(c in header for c in model.columns):
        return [header.index(c) for c in model.columns]
    if len(header) == D:
        return list(range(D))
    raise DataError(f"schema mismatch: model expects {D} feature columns, found {len(header)} columns")


def cmd_score(args) -> int:
    if not args.model:
        raise UsageError("score needs --model <model file>")
    model = load_model(args.model)
    src = Path(args.csv)
    if not src.exists():
        raise DataError(f"file not found: {src}")
    dst = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        with src.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            writer = csv.writer(dst, lineterminator="\n")
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise DataError(f"{src}: empty file (no header row)") from None
            pos = _feature_positions(header, model)
            writer.writerow(header + ["score", "predicted_label"])
            for lineno, rec in enumerate(reader, start=2):
                if not rec:
                    continue
                if len(rec) != len(header):
                    raise DataError(f"{src}: row {lineno} has {len(rec)} cells, header has {len(header)}")
                try:
                    x = np.array([float(rec[p]) for p in pos])
                except ValueError:
                    raise DataError(f"{src}: row {lineno}: non-numeric feature cell") from None
                s = float(model.score(x[None, :])[0])
                writer.writerow(rec + [repr(s), int(s > 0)])
    finally:
        if dst is not sys.stdout:
            dst.close()
    return 0


def cmd_report(args) -> int:
    if not args.out:
        raise UsageError("report needs --out <benchmark output directory>")
    out = Path(args.out)
    found = False
    for stem in ("linear", "kernel"):
        p = out / f"{stem}.csv"
        if p.exists():
            found = True
            print(f"== {stem} ==")
            print(format_table(read_report_csv(p.read_text(encoding="utf-8"))), end="")
    if not found:
        raise DataError(f"no report files in {out}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="subocc", description="Subspace one-class classification pipeline")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    t = sub.add_parser("train", help="grid-search and fit one model variant")
    t.add_argument("--config", required=True)
    t.add_argument("--model", help="model variant, e.g. gessvdd-knn-g-min")
    t.add_argument("--dataset", help="dataset name from the config (default: first)")
    t.add_argument("--seed", type=int)
    t.add_argument("--out")
    t.set_defaults(func=cmd_train)

    b = sub.add_parser("benchmark", help="run the full evaluation protocol")
    b.add_argument("--config", required=True)
    b.add_argument("--seed", type=int)
    b.add_argument("--out")
    b.set_defaults(func=cmd_benchmark)

    s = sub.add_parser("score", help="append score and predicted_label columns to a CSV")
    s.add_argument("csv")
    s.add_argument("--model", required=True, help="model file written by train")
    s.add_argument("--out", help="output CSV (default: stdout)")
    s.set_defaults(func=cmd_score)

    r = sub.add_parser("report", help="print the tables of a benchmark run")
    r.add_argument("--out", required=True, help="benchmark output directory")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="level=%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, OccError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
