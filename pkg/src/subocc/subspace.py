"""Subspace SVDD (SSVDD) and graph-embedded subspace SVDD (GESSVDD).

Data matrices are N x D with samples as rows, so the graph scatter is
``S_x = X^T L X`` and a projection ``Q`` (d x D) maps a sample ``x`` to
``Q x``.  GESSVDD additionally whitens the projected data with
``S_Q^{-1/2}`` where ``S_Q = Q S_x Q^T``.

Training alternates between solving the SVDD dual in the current subspace
and updating ``Q`` with one of three solvers:

* ``gradient``: a step along the gradient of the dual objective w.r.t. Q
  (descent for ``min``, ascent for ``max``);
* ``spectral``: generalized eigenvectors of ``(X^T L_a X, S_x)``;
* ``spectral_regression``: sample-space eigenvectors of ``(L_a, L_x)``
  followed by ridge regression onto the features.

Here ``L_a = diag(a) - a a^T`` for the current dual multipliers ``a``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from . import graphs
from .baselines import OcsvmModel, covariance_whitener, fit_ocsvm
from .dataio import NormStats, TransactionTable, fit_norm_stats, normalize_array, TARGET
from .errors import DataError, NumericalError, UsageError
from .kernelization import NptState, fit_rbf_npt, npt_map, npt_residual
from .linalg import EIG_FLOOR, descending_order, floored_inv, freeze_contiguous, inv_sqrt, orthonormalize_rows, sign_normalize, sym
from .svdd import (
    KKT_TOL,
    MAX_ITER,
    PARTITION_TOL,
    SphereModel,
    linear_gram,
    partition_alphas,
    solve_dual,
    sphere_from_solution,
)
from .variants import ModelSpec, parse_spec

log = logging.getLogger(__name__)

RIDGE = 1e-3
DEFAULT_ITERATIONS = 5


@dataclass(frozen=True)
class TrainConfig:
    spec: ModelSpec
    C: float = 0.1
    d: int = 1
    beta: float = 0.0
    eta: float = 1.0
    sigma: float | None = None
    iterations: int = DEFAULT_ITERATIONS
    k: int = graphs.DEFAULT_K
    ridge: float = RIDGE
    eps: float = EIG_FLOOR
    tol: float = KKT_TOL
    max_iter: int = MAX_ITER

    def __post_init__(self):
        if isinstance(self.spec, str):
            object.__setattr__(self, "spec", parse_spec(self.spec))
        if self.iterations < 0:
            raise UsageError("iterations must be >= 0")
        if self.spec.is_subspace and self.d < 1:
            raise UsageError("d must be >= 1")
        if self.spec.kernel and not (self.sigma and self.sigma > 0):
            raise UsageError(f"{self.spec.name} needs a positive sigma")
        if not self.C > 0:
            raise UsageError("C must be positive")

    def describe(self) -> dict:
        """Hyperparameters that matter for this family, for logs and reports."""
        out = {"C": self.C}
        fam = self.spec.family
        if self.spec.is_subspace:
            out["d"] = self.d
            out["iterations"] = self.iterations
            if self.spec.solver == "gradient":
                out["eta"] = self.eta
            if fam == "ssvdd" and self.spec.psi != 0:
                out["beta"] = self.beta
            if fam == "gessvdd" and self.spec.graph == "knn":
                out["k"] = self.k
            if self.spec.solver == "spectral_regression":
                out["ridge"] = self.ridge
        if self.spec.kernel:
            out["sigma"] = self.sigma
        return out


@dataclass(frozen=True)
class ProjectionState:
    Q: np.ndarray
    S_x: np.ndarray
    S_Q: np.ndarray
    whitener: np.ndarray

    def __post_init__(self):
        freeze_contiguous(self, ("Q", "S_x", "S_Q", "whitener"))

    def transform(self, X) -> np.ndarray:
        return np.asarray(X, float) @ self.Q.T @ self.whitener.T


@dataclass(frozen=True)
class TrainedModel:
    config: TrainConfig
    norm: NormStats
    projection: ProjectionState | None
    sphere: SphereModel | None = None
    npt: NptState | None = None
    ocsvm: OcsvmModel | None = None
    columns: tuple = ()
    criterion_trace: tuple = field(default=(), compare=False)

    @property
    def input_dim(self) -> int:
        return self.norm.dim

    def represent(self, X) -> np.ndarray:
        """Raw features -> normalized -> (kernel map) -> projected/whitened."""
        X = np.atleast_2d(np.asarray(X, float))
        if X.shape[1] != self.input_dim:
            raise DataError(f"dimension mismatch: model expects {self.input_dim} features, got {X.shape[1]}")
        Z = normalize_array(X, self.norm)
        if self.npt is not None:
            Z = npt_map(Z, self.npt)
        if self.projection is not None:
            Z = self.projection.transform(Z)
        return Z

    def score(self, X) -> np.ndarray:
        Z = self.represent(X)
        if self.ocsvm is not None:
            return self.ocsvm.score(Z)
        s = np.atleast_1d(self.sphere.score(Z))
        if self.npt is not None and self.config.spec.family == "svdd":
            # plain kernel SVDD: exact kernel distance, not just its in-span part
            s = s + npt_residual(normalize_array(np.atleast_2d(X), self.norm), self.npt)
        return s


# ---------------------------------------------------------------- building blocks


def init_projection(X, d: int) -> np.ndarray:
    """Top-d principal directions of ``X`` as rows (sign-normalized)."""
    X = np.asarray(X, float)
    n, D = X.shape
    if not 1 <= d <= min(n, D):
        raise UsageError(f"d={d} must satisfy 1 <= d <= min(N, D) = {min(n, D)}")
    Xc = X - X.mean(axis=0)
    lam, V = np.linalg.eigh(Xc.T @ Xc)
    order = descending_order(lam, V)[:d]
    return sign_normalize(V[:, order].T)


def scatter_from_graph(X, L) -> np.ndarray:
    X = np.asarray(X, float)
    L = np.asarray(L, float)
    if L.shape != (X.shape[0], X.shape[0]):
        raise DataError(f"Laplacian shape {L.shape} does not match {X.shape[0]} samples")
    return sym(X.T @ L @ X)


def whitener(S_Q, eps=EIG_FLOOR) -> np.ndarray:
    """S_Q^{-1/2} with eigenvalues below ``eps`` raised to ``eps``."""
    return inv_sqrt(S_Q, eps)


def alpha_laplacian(alpha) -> np.ndarray:
    alpha = np.asarray(alpha, float)
    return np.diag(alpha) - np.outer(alpha, alpha)


def alpha_scatter(X, alpha) -> np.ndarray:
    """X^T (diag(a) - a a^T) X without forming the N x N matrix."""
    X = np.asarray(X, float)
    alpha = np.asarray(alpha, float)
    m = X.T @ alpha
    return sym((X * alpha[:, None]).T @ X - np.outer(m, m))


def _criterion(Q, M, S_x, eps=EIG_FLOOR) -> float:
    S_Q = Q @ S_x @ Q.T
    return float(np.trace(floored_inv(S_Q, eps) @ (Q @ M @ Q.T)))


def q_criterion(Q, X, L_alpha, S_x, eps=EIG_FLOOR) -> float:
    """tr((Q S_x Q^T)^{-1} Q X^T L_a X Q^T): the dual objective in whitened coordinates."""
    Q = np.atleast_2d(np.asarray(Q, float))
    X = np.asarray(X, float)
    M = sym(X.T @ np.asarray(L_alpha, float) @ X)
    return _criterion(Q, M, S_x, eps)


def ssvdd_criterion(Q, X, L_alpha, psi_factor=None, beta=0.0) -> float:
    Q = np.atleast_2d(np.asarray(Q, float))
    X = np.asarray(X, float)
    M = sym(X.T @ np.asarray(L_alpha, float) @ X)
    val = float(np.trace(Q @ M @ Q.T))
    if psi_factor is not None and beta:
        val += beta * float(np.trace(Q @ psi_factor @ Q.T))
    return val


def _gessvdd_grad(Q, M, S_x, eps=EIG_FLOOR):
    Sinv = floored_inv(Q @ S_x @ Q.T, eps)
    SQM = Sinv @ Q @ M
    return 2.0 * SQM - 2.0 * SQM @ Q.T @ Sinv @ Q @ S_x


def _ssvdd_grad(Q, M, psi_factor=None, beta=0.0):
    g = 2.0 * Q @ M
    if psi_factor is not None and beta:
        g = g + beta * 2.0 * Q @ psi_factor
    return g


def q_gradient(Q, X, L_alpha, S_x=None, psi_factor=None, beta=0.0, eps=EIG_FLOOR) -> np.ndarray:
    """Gradient of the subspace criterion with respect to ``Q``.

    With ``S_x`` given this is the GESSVDD trace-ratio gradient
    ``2 S_Q^{-1} Q M - 2 S_Q^{-1} Q M Q^T S_Q^{-1} Q S_x``; with ``S_x=None``
    it is the SSVDD gradient ``2 Q M + beta * 2 Q F`` where ``F`` is the
    regularizer factor from :func:`psi_regularizer`.
    """
    Q = np.atleast_2d(np.asarray(Q, float))
    X = np.asarray(X, float)
    M = sym(X.T @ np.asarray(L_alpha, float) @ X)
    if S_x is None:
        return _ssvdd_grad(Q, M, psi_factor, beta)
    return _gessvdd_grad(Q, M, np.asarray(S_x, float), eps)


def gradient_update(Q, grad, eta, direction, orthonormalize=False, iteration=None) -> np.ndarray:
    if direction not in ("min", "max"):
        raise UsageError(f"unknown direction {direction!r}")
    grad = np.asarray(grad, float)
    if not np.all(np.isfinite(grad)):
        where = "" if iteration is None else f" at iteration {iteration}"
        raise NumericalError(f"non-finite gradient{where}")
    step = -eta if direction == "min" else eta
    Q_new = np.asarray(Q, float) + step * grad
    if orthonormalize:
        Q_new = orthonormalize_rows(Q_new)
    if not np.all(np.isfinite(Q_new)):
        raise NumericalError("non-finite projection after update")
    return Q_new


def _select_eigenpairs(lam, V, d, direction, label):
    """Pick d eigenvectors (columns of V): largest/smallest positive eigenvalues."""
    scale = max(float(np.abs(lam).max()), 1e-300)
    pos = np.flatnonzero(lam > 1e-10 * scale)
    if direction == "max":
        chosen = pos[np.argsort(-lam[pos], kind="stable")][:d]
    elif direction == "min":
        chosen = pos[np.argsort(lam[pos], kind="stable")][:d]
    else:
        raise UsageError(f"unknown direction {direction!r}")
    if chosen.size < d:
        rest = np.setdiff1d(np.arange(lam.size), chosen)
        pad = rest[np.argsort(np.abs(lam[rest]), kind="stable")][: d - chosen.size]
        log.warning(
            "phase=%s only %d positive eigenvalues for d=%d; padding with smallest-|lambda| vectors",
            label, chosen.size, d,
        )
        chosen = np.concatenate([chosen, pad])
    return lam[chosen], V[:, chosen]


def spectral_update(M, S_x, d, direction, eps=EIG_FLOOR) -> np.ndarray:
    """Solve ``M v = lambda (S_x + eps I) v`` and keep d eigenvectors as rows."""
    M = sym(M)
    B = sym(S_x) + eps * np.eye(M.shape[0])
    if d > M.shape[0]:
        raise UsageError(f"d={d} exceeds dimension {M.shape[0]}")
    try:
        lam, V = scipy.linalg.eigh(M, B)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"generalized eigensolver failed: {exc}") from exc
    _, Vd = _select_eigenpairs(lam, V, d, direction, "spectral")
    return sign_normalize(Vd.T)


def spectral_regression_targets(L_alpha, L_x, d, direction, eps=EIG_FLOOR):
    """Sample-space eigenproblem ``L_a t = lambda (L_x + eps I) t``.

    Returns ``(eigenvalues, T)`` with the selected target vectors as columns.
    """
    A = sym(L_alpha)
    B = sym(L_x) + eps * np.eye(A.shape[0])
    try:
        lam, V = scipy.linalg.eigh(A, B)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"generalized eigensolver failed: {exc}") from exc
    lam_d, T = _select_eigenpairs(lam, V, d, direction, "spectral_regression")
    return lam_d, sign_normalize(T.T).T


def spectral_regression_update(L_alpha, L_x, X, d, direction, ridge=RIDGE, eps=EIG_FLOOR) -> np.ndarray:
    """Eigen-targets in sample space, then ridge regression ``X q ~ t`` per target."""
    X = np.asarray(X, float)
    if d > X.shape[1]:
        raise UsageError(f"d={d} exceeds dimension {X.shape[1]}")
    _, T = spectral_regression_targets(L_alpha, L_x, d, direction, eps)
    G = X.T @ X + ridge * np.eye(X.shape[1])
    return scipy.linalg.solve(G, X.T @ T, assume_a="pos").T


def psi_regularizer(variant, X, alpha, C, tol=PARTITION_TOL):
    """Regularizer weights ``lambda`` and the factor ``X^T lambda lambda^T X``.

    Variant 0 disables the term, 1 uses all ones, 2 uses the multipliers of
    support vectors only and 3 uses every nonzero multiplier.
    """
    X = np.asarray(X, float)
    alpha = np.asarray(alpha, float)
    n = alpha.shape[0]
    if variant == 0:
        lam = np.zeros(n)
    elif variant == 1:
        lam = np.ones(n)
    elif variant == 2:
        _, sv, _ = partition_alphas(alpha, C, tol)
        lam = np.zeros(n)
        lam[sv] = alpha[sv]
    elif variant == 3:
        inside, _, _ = partition_alphas(alpha, C, tol)
        lam = alpha.copy()
        lam[inside] = 0.0
    else:
        raise UsageError(f"unknown regularizer variant {variant!r}")
    v = X.T @ lam
    return lam, np.outer(v, v)


# ---------------------------------------------------------------- training


def _prepare(config: TrainConfig, X0, cache):
    """Kernel map and graph Laplacian, shared across configs through ``cache``."""
    if config.spec.kernel:
        key = ("npt", config.sigma)
        if cache is not None and key in cache:
            X, npt = cache[key]
        else:
            X, npt = fit_rbf_npt(X0, config.sigma)
            if cache is not None:
                cache[key] = (X, npt)
    else:
        X, npt = X0, None
    return X, npt


def _laplacian(config: TrainConfig, X, cache):
    n = X.shape[0]
    k = min(config.k, n - 1)
    key = ("graph", config.sigma if config.spec.kernel else None, config.spec.graph, k)
    if cache is not None and key in cache:
        return cache[key]
    if config.spec.graph == "knn" and k < 1:
        L = np.zeros((n, n))
    else:
        L = graphs.build_laplacian(config.spec.graph, X, k)
    if cache is not None:
        cache[key] = L
    return L


def _solve(config, P):
    return solve_dual(linear_gram(P), config.C, tol=config.tol, max_iter=config.max_iter)


def _train_subspace(config: TrainConfig, X, cache):
    spec = config.spec
    n, D = X.shape
    if config.d > D:
        raise UsageError(f"d={config.d} exceeds representation dimension {D}")
    Q = init_projection(X, config.d)
    trace = []
    if spec.family == "gessvdd":
        L = _laplacian(config, X, cache)
        S_x = scatter_from_graph(X, L)
    else:
        L = None
        S_x = None

    def project(Q):
        if S_x is None:
            return X @ Q.T, np.eye(Q.shape[0]), None
        S_Q = sym(Q @ S_x @ Q.T)
        W = whitener(S_Q, config.eps)
        return X @ Q.T @ W, W, S_Q

    for it in range(config.iterations):
        P, W, S_Q = project(Q)
        sol = _solve(config, P)
        M = alpha_scatter(X, sol.alpha)
        if spec.family == "ssvdd":
            _, F = psi_regularizer(spec.psi, X, sol.alpha, config.C)
            trace.append(float(np.trace(Q @ M @ Q.T)))
            grad = _ssvdd_grad(Q, M, F, config.beta)
            Q = gradient_update(Q, grad, config.eta, spec.direction, orthonormalize=True, iteration=it)
        else:
            trace.append(_criterion(Q, M, S_x, config.eps))
            if spec.solver == "gradient":
                grad = _gessvdd_grad(Q, M, S_x, config.eps)
                Q = gradient_update(Q, grad, config.eta, spec.direction, iteration=it)
            elif spec.solver == "spectral":
                Q = spectral_update(M, S_x, config.d, spec.direction, config.eps)
            else:
                Q = spectral_regression_update(
                    alpha_laplacian(sol.alpha), L, X, config.d, spec.direction, config.ridge, config.eps
                )
        log.debug("phase=train iter=%d objective=%.10g", it, sol.objective)
    P, W, S_Q = project(Q)
    sol = _solve(config, P)
    if S_x is None:
        S_x_out = np.eye(D)
        S_Q = Q @ Q.T
    else:
        S_x_out = S_x
    proj = ProjectionState(Q, S_x_out, S_Q, W)
    return proj, sphere_from_solution(sol, P), tuple(trace)


def train(config: TrainConfig, table, norm: NormStats | None = None, cache=None) -> TrainedModel:
    """Fit one model on target-class rows.

    ``table`` is a :class:`TransactionTable` containing only target rows (or
    a raw feature array).  ``norm`` defaults to statistics of ``table``
    itself; the evaluation protocol passes statistics from the full
    pre-resampling training split instead.  ``cache`` may be a dict reused
    across calls on the same rows to share kernel maps and graphs.
    """
    if isinstance(table, TransactionTable):
        if np.any(table.labels != TARGET):
            raise DataError("training table must contain target-class rows only")
        X_raw = table.features
        columns = table.columns
        if norm is None:
            norm = fit_norm_stats(table)
    else:
        columns = ()
        X_raw = np.atleast_2d(np.asarray(table, float))
        if norm is None:
            norm = fit_norm_stats(TransactionTable(X_raw, np.zeros(X_raw.shape[0], np.int64)))
    X0 = normalize_array(X_raw, norm)
    fam = config.spec.family
    if fam != "ocsvm":
        X, npt = _prepare(config, X0, cache)
    if fam in ("gessvdd", "ssvdd"):
        proj, sphere, trace = _train_subspace(config, X, cache)
        return TrainedModel(config, norm, proj, sphere, npt, columns=columns, criterion_trace=trace)
    if fam == "ocsvm":
        # the one-class SVM is not translation invariant, so it uses the raw
        # (uncentered) kernel rather than the centered kernel coordinates
        model = fit_ocsvm(X0, config.C, sigma=config.sigma if config.spec.kernel else None,
                          tol=config.tol, max_iter=config.max_iter)
        return TrainedModel(config, norm, None, None, None, ocsvm=model, columns=columns)
    D = X.shape[1]
    if fam == "esvdd":
        W = covariance_whitener(X, config.eps)
        Xc = X - X.mean(axis=0)
        S = sym(Xc.T @ Xc / X.shape[0])
        proj = ProjectionState(np.eye(D), S, S, W)
    else:
        proj = ProjectionState(np.eye(D), np.eye(D), np.eye(D), np.eye(D))
    P = proj.transform(X)
    sphere = sphere_from_solution(_solve(config, P), P)
    return TrainedModel(config, norm, proj, sphere, npt, columns=columns)


def predict(model: TrainedModel, table):
    """Scores and labels (1 = outlier iff score > 0) for raw rows."""
    X = table.features if isinstance(table, TransactionTable) else table
    scores = model.score(X)
    return scores, (scores > 0).astype(np.int64)


def with_overrides(config: TrainConfig, **kw) -> TrainConfig:
    return replace(config, **kw)
