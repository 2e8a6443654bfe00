"""Reference one-class models: one-class SVM (nu parameterization) and
ellipsoidal SVDD (SVDD after whitening by the data covariance)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, UsageError
from .kernelization import rbf_kernel
from .linalg import EIG_FLOOR, freeze_contiguous, inv_sqrt
from .svdd import (
    KKT_TOL,
    MAX_ITER,
    PARTITION_TOL,
    SphereModel,
    fit_sphere,
    partition_alphas,
    solve_simplex_qp,
)


@dataclass(frozen=True)
class OcsvmModel:
    alpha: np.ndarray
    rho: float
    nu: float
    train_repr: np.ndarray
    sigma: float | None = None  # None means linear kernel

    def __post_init__(self):
        freeze_contiguous(self, ("alpha", "train_repr"))

    def kernel(self, Z) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(Z, float))
        if Z.shape[1] != self.train_repr.shape[1]:
            raise DataError(
                f"dimension mismatch: expected {self.train_repr.shape[1]}, got {Z.shape[1]}"
            )
        if self.sigma is None:
            return Z @ self.train_repr.T
        return rbf_kernel(Z, self.train_repr, self.sigma)

    def decision_function(self, Z) -> np.ndarray:
        """f(x) = sum_i a_i k(x_i, x) - rho; the point is normal iff f >= 0."""
        return self.kernel(Z) @ self.alpha - self.rho

    def score(self, Z) -> np.ndarray:
        # sign flipped so that, as for spheres, score > 0 means outlier
        return -self.decision_function(Z)


def train_ocsvm(K, nu, tol=KKT_TOL, max_iter=MAX_ITER, train_repr=None, sigma=None) -> OcsvmModel:
    """Solve ``min 0.5 a^T K a`` s.t. ``sum a = 1, 0 <= a <= 1/(nu N)``."""
    K = np.asarray(K, float)
    n = K.shape[0]
    if not 0.0 < nu <= 1.0:
        raise UsageError(f"nu must lie in (0, 1], got {nu}")
    if nu * n < 1.0 - 1e-12:
        raise DataError(f"infeasible nu: nu*N = {nu * n:g} < 1")
    ub = 1.0 / (nu * n)
    res = solve_simplex_qp(K, np.zeros(n), ub, tol=tol, max_iter=max_iter)
    a = res.alpha
    f = K @ a
    inside, support, outside = partition_alphas(a, ub, PARTITION_TOL)
    if support.size:
        rho = float(f[support].mean())
    else:
        lo = f[outside].max() if outside.size else f[inside].min()
        hi = f[inside].min() if inside.size else lo
        rho = 0.5 * float(lo + max(hi, lo))
    if train_repr is None:
        train_repr = np.empty((n, 0))
    return OcsvmModel(a, rho, float(nu), np.array(train_repr, float), sigma)


def fit_ocsvm(X, nu, sigma=None, **kw) -> OcsvmModel:
    X = np.asarray(X, float)
    K = X @ X.T if sigma is None else rbf_kernel(X, X, sigma)
    return train_ocsvm(0.5 * (K + K.T), nu, train_repr=X, sigma=sigma, **kw)


def covariance_whitener(X, eps=EIG_FLOOR) -> np.ndarray:
    """(S_t / N)^{-1/2} with eigenvalues floored at ``eps``."""
    X = np.asarray(X, float)
    Xc = X - X.mean(axis=0)
    return inv_sqrt(Xc.T @ Xc / X.shape[0], eps)


@dataclass(frozen=True)
class EllipsoidModel:
    whitener: np.ndarray
    sphere: SphereModel

    def transform(self, Z) -> np.ndarray:
        return np.atleast_2d(np.asarray(Z, float)) @ self.whitener

    def score(self, Z) -> np.ndarray:
        return self.sphere.score(self.transform(Z))


def train_esvdd(X, C, eps=EIG_FLOOR, tol=KKT_TOL, max_iter=MAX_ITER) -> EllipsoidModel:
    X = np.asarray(X, float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2:
        raise DataError("ESVDD needs at least 2 training points")
    W = covariance_whitener(X, eps)
    return EllipsoidModel(W, fit_sphere(X @ W, C, tol=tol, max_iter=max_iter))
