"""Model variant descriptors and their string names.

Names follow ``[model]-[graph]-[solver]-[min|max]`` for graph-embedded
models and ``[model]-[regularizer]-[min|max]`` for SSVDD, optionally with a
trailing ``-rbf`` for the kernelized version::

    gessvdd-knn-g-min      GESSVDD, kNN graph, gradient solver, minimize
    gessvdd-pca-e-max-rbf  GESSVDD, PCA graph, spectral solver, maximize, RBF
    ssvdd-psi2-max         SSVDD with regularizer variant 2, maximize
    svdd / esvdd / ocsvm   baselines
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import UsageError

FAMILIES = ("gessvdd", "ssvdd", "svdd", "esvdd", "ocsvm")
GRAPH_TOKENS = {"knn": "knn", "pca": "pca", "i": "identity", "identity": "identity"}
GRAPH_CODES = {"knn": "knn", "pca": "pca", "identity": "i"}
GRAPH_DISPLAY = {"knn": "kNN", "pca": "PCA", "identity": "I"}
SOLVER_TOKENS = {
    "g": "gradient",
    "gradient": "gradient",
    "e": "spectral",
    "spectral": "spectral",
    "s": "spectral_regression",
    "spectral_regression": "spectral_regression",
}
SOLVER_CODES = {"gradient": "g", "spectral": "e", "spectral_regression": "s"}
DIRECTIONS = ("min", "max")
PSI_VARIANTS = (0, 1, 2, 3)


@dataclass(frozen=True)
class ModelSpec:
    family: str
    graph: str | None = None
    solver: str | None = None
    direction: str | None = None
    psi: int | None = None
    kernel: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UsageError(f"unknown model family {self.family!r}")
        if self.family == "gessvdd":
            if self.graph not in GRAPH_CODES:
                raise UsageError(f"unknown graph {self.graph!r}")
            if self.solver not in SOLVER_CODES:
                raise UsageError(f"unknown solver {self.solver!r}")
            if self.direction not in DIRECTIONS:
                raise UsageError(f"unknown direction {self.direction!r}")
        elif self.family == "ssvdd":
            if self.solver is None:
                object.__setattr__(self, "solver", "gradient")
            if self.solver != "gradient":
                raise UsageError("SSVDD only supports the gradient solver")
            if self.psi not in PSI_VARIANTS:
                raise UsageError(f"unknown regularizer variant {self.psi!r}")
            if self.direction not in DIRECTIONS:
                raise UsageError(f"unknown direction {self.direction!r}")

    @property
    def is_subspace(self) -> bool:
        return self.family in ("gessvdd", "ssvdd")

    @property
    def name(self) -> str:
        return format_spec(self)

    @property
    def display_name(self) -> str:
        if self.family == "gessvdd":
            return "GESSVDD-{}-{}-{}".format(
                GRAPH_DISPLAY[self.graph], SOLVER_CODES[self.solver].upper(), self.direction
            )
        if self.family == "ssvdd":
            return f"SSVDD-Psi{self.psi}-{self.direction}"
        return self.family.upper()


def parse_spec(text: str) -> ModelSpec:
    tokens = [t for t in text.strip().lower().replace("ψ", "psi").split("-")]
    if not tokens or not tokens[0]:
        raise UsageError("empty model name")
    kernel = False
    if tokens[-1] in ("rbf", "linear"):
        kernel = tokens.pop() == "rbf"
    family, rest = tokens[0], tokens[1:]
    if family not in FAMILIES:
        raise UsageError(f"unknown model family {family!r}")
    if family == "gessvdd":
        if len(rest) != 3:
            raise UsageError(f"expected gessvdd-<graph>-<solver>-<min|max>, got {text!r}")
        g, s, d = rest
        if g not in GRAPH_TOKENS:
            raise UsageError(f"unknown graph {g!r}")
        if s not in SOLVER_TOKENS:
            raise UsageError(f"unknown solver {s!r}")
        if d not in DIRECTIONS:
            raise UsageError(f"unknown direction {d!r}")
        return ModelSpec(family, GRAPH_TOKENS[g], SOLVER_TOKENS[s], d, kernel=kernel)
    if family == "ssvdd":
        if len(rest) != 2:
            raise UsageError(f"expected ssvdd-psi<0-3>-<min|max>, got {text!r}")
        p, d = rest
        if not (p.startswith("psi") and p[3:].isdigit() and int(p[3:]) in PSI_VARIANTS):
            raise UsageError(f"unknown regularizer {p!r}")
        if d not in DIRECTIONS:
            raise UsageError(f"unknown direction {d!r}")
        return ModelSpec(family, solver="gradient", direction=d, psi=int(p[3:]), kernel=kernel)
    if rest:
        raise UsageError(f"unexpected token {rest[0]!r} after {family!r}")
    return ModelSpec(family, kernel=kernel)


def format_spec(spec: ModelSpec) -> str:
    if spec.family == "gessvdd":
        base = f"gessvdd-{GRAPH_CODES[spec.graph]}-{SOLVER_CODES[spec.solver]}-{spec.direction}"
    elif spec.family == "ssvdd":
        base = f"ssvdd-psi{spec.psi}-{spec.direction}"
    else:
        base = spec.family
    return base + ("-rbf" if spec.kernel else "")


def all_variants(kernel: bool) -> list:
    """Every in-scope variant in table order (29 per kernel setting)."""
    out = []
    for graph in ("knn", "pca", "identity"):
        for solver in ("gradient", "spectral", "spectral_regression"):
            for direction in DIRECTIONS:
                out.append(ModelSpec("gessvdd", graph, solver, direction, kernel=kernel))
    for psi in PSI_VARIANTS:
        for direction in DIRECTIONS:
            out.append(ModelSpec("ssvdd", solver="gradient", direction=direction, psi=psi, kernel=kernel))
    for fam in ("ocsvm", "svdd", "esvdd"):
        out.append(ModelSpec(fam, kernel=kernel))
    return out


def expand_model_list(items) -> list:
    """Expand names (and the ``all60`` keyword) into unique specs, order kept."""
    seen, out = set(), []
    for item in items:
        item = item.strip()
        if not item:
            continue
        specs = all_variants(False) + all_variants(True) if item.lower() == "all60" else [parse_spec(item)]
        for s in specs:
            if s not in seen:
                seen.add(s)
                out.append(s)
    return out
