"""Model files: a single JSON document with a mandatory version field.

Arrays are stored as base64 of their little-endian bytes and scalars as
JSON numbers (Python writes floats with ``repr``), so a save/load round
trip is bit-exact and identical models serialize to identical bytes.
"""
from __future__ import annotations

import base64
import dataclasses
import json
from pathlib import Path

import numpy as np

from .baselines import OcsvmModel
from .dataio import NormStats
from .errors import DataError
from .kernelization import NptState
from .subspace import ProjectionState, TrainConfig, TrainedModel
from .svdd import DualSolution, SphereModel
from .variants import format_spec, parse_spec

FORMAT = "subocc-model"
VERSION = 1


def _enc(a) -> dict:
    a = np.asarray(a)
    if a.dtype.kind in "iub":
        a = a.astype("<i8")
    else:
        a = a.astype("<f8")
    return {"dtype": a.dtype.str, "shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _dec(d) -> np.ndarray:
    raw = base64.b64decode(d["data"])
    return np.frombuffer(raw, dtype=np.dtype(d["dtype"])).reshape(d["shape"]).copy()


def _config_dict(cfg: TrainConfig) -> dict:
    out = {}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        out[f.name] = format_spec(v) if f.name == "spec" else v
    return out


def model_to_dict(model: TrainedModel) -> dict:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "family": model.config.spec.family,
        "config": _config_dict(model.config),
        "columns": list(model.columns),
        "norm": {"mean": _enc(model.norm.mean), "std": _enc(model.norm.std)},
        "npt": None,
        "projection": None,
        "sphere": None,
        "ocsvm": None,
    }
    if model.npt is not None:
        s = model.npt
        doc["npt"] = {
            "train_data": _enc(s.train_data),
            "sigma": s.sigma,
            "kernel_row_means": _enc(s.kernel_row_means),
            "kernel_grand_mean": s.kernel_grand_mean,
            "eigvecs": _enc(s.eigvecs),
            "eigvals": _enc(s.eigvals),
        }
    if model.projection is not None:
        p = model.projection
        doc["projection"] = {k: _enc(getattr(p, k)) for k in ("Q", "S_x", "S_Q", "whitener")}
    if model.sphere is not None:
        sp, du = model.sphere, model.sphere.dual
        doc["sphere"] = {
            "alpha": _enc(du.alpha),
            "C": du.C,
            "inside_idx": _enc(du.inside_idx),
            "support_idx": _enc(du.support_idx),
            "outside_idx": _enc(du.outside_idx),
            "objective": du.objective,
            "kkt_gap": du.kkt_gap,
            "iterations": du.iterations,
            "train_repr": _enc(sp.train_repr),
            "center": _enc(sp.center),
            "radius": sp.radius,
        }
    if model.ocsvm is not None:
        o = model.ocsvm
        doc["ocsvm"] = {
            "alpha": _enc(o.alpha),
            "rho": o.rho,
            "nu": o.nu,
            "train_repr": _enc(o.train_repr),
            "sigma": o.sigma,
        }
    return doc


def model_from_dict(doc: dict) -> TrainedModel:
    if doc.get("format") != FORMAT:
        raise DataError("not a model file (format tag missing)")
    if doc.get("version") != VERSION:
        raise DataError(f"unsupported model file version {doc.get('version')!r}")
    cfg = dict(doc["config"])
    cfg["spec"] = parse_spec(cfg["spec"])
    config = TrainConfig(**cfg)
    norm = NormStats(_dec(doc["norm"]["mean"]), _dec(doc["norm"]["std"]))
    npt = proj = sphere = ocsvm = None
    if doc["npt"] is not None:
        n = doc["npt"]
        npt = NptState(_dec(n["train_data"]), n["sigma"], _dec(n["kernel_row_means"]),
                       n["kernel_grand_mean"], _dec(n["eigvecs"]), _dec(n["eigvals"]))
    if doc["projection"] is not None:
        p = doc["projection"]
        proj = ProjectionState(_dec(p["Q"]), _dec(p["S_x"]), _dec(p["S_Q"]), _dec(p["whitener"]))
    if doc["sphere"] is not None:
        s = doc["sphere"]
        dual = DualSolution(_dec(s["alpha"]), s["C"], _dec(s["inside_idx"]), _dec(s["support_idx"]),
                            _dec(s["outside_idx"]), s["objective"], s["kkt_gap"], s["iterations"])
        sphere = SphereModel(dual, _dec(s["train_repr"]), _dec(s["center"]), s["radius"])
    if doc["ocsvm"] is not None:
        o = doc["ocsvm"]
        ocsvm = OcsvmModel(_dec(o["alpha"]), o["rho"], o["nu"], _dec(o["train_repr"]), o["sigma"])
    return TrainedModel(config, norm, proj, sphere, npt, ocsvm, tuple(doc.get("columns", ())))


def dumps(model: TrainedModel) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True, indent=1) + "\n"


def loads(text: str) -> TrainedModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"model file is not valid JSON: {exc}") from None
    return model_from_dict(doc)


def save_model(model: TrainedModel, path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")


def load_model(path) -> TrainedModel:
    p = Path(path)
    if not p.exists():
        raise DataError(f"model file not found: {p}")
    return loads(p.read_text(encoding="utf-8"))
