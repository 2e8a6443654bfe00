"""RBF kernel and the non-linear projection trick.

``npt_fit`` turns an N x N kernel matrix into explicit coordinates
``Phi = Lambda^{1/2} U^T`` (r x N) of the centered kernel, so the linear
machinery in :mod:`subocc.svdd` and :mod:`subocc.subspace` runs unchanged in
kernel space.  Test points are mapped with the training centering
statistics.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DataError, NumericalError, UsageError
from .linalg import freeze_contiguous, sign_normalize

EPS_NPT = 1e-10


def rbf_kernel(X, Y, sigma: float) -> np.ndarray:
    if not sigma > 0:
        raise UsageError(f"sigma must be positive, got {sigma}")
    X = np.atleast_2d(np.asarray(X, float))
    Y = np.atleast_2d(np.asarray(Y, float))
    if X.shape[1] != Y.shape[1]:
        raise DataError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    return np.exp(-cdist(X, Y, "sqeuclidean") / (2.0 * sigma**2))


@dataclass(frozen=True)
class NptState:
    train_data: np.ndarray
    sigma: float
    kernel_row_means: np.ndarray
    kernel_grand_mean: float
    eigvecs: np.ndarray
    eigvals: np.ndarray

    def __post_init__(self):
        freeze_contiguous(self, ("train_data", "kernel_row_means", "eigvecs", "eigvals"))

    @property
    def rank(self) -> int:
        return self.eigvals.shape[0]

    @property
    def input_dim(self) -> int:
        return self.train_data.shape[1]


def center_kernel(K) -> np.ndarray:
    K = np.asarray(K, float)
    row = K.mean(axis=1)
    col = K.mean(axis=0)
    return K - row[:, None] - col[None, :] + K.mean()


def npt_fit(K, eps_npt=EPS_NPT, train_data=None, sigma=float("nan")):
    """Explicit coordinates of the centered kernel.

    Returns ``(Phi, state)`` with ``Phi`` of shape (r, N) such that
    ``Phi.T @ Phi`` equals the double-centered kernel up to the dropped
    eigenvalues (those <= ``eps_npt``).
    """
    K = np.asarray(K, float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DataError(f"kernel must be square, got {K.shape}")
    if np.abs(K - K.T).max() > 1e-9 * max(1.0, np.abs(K).max()):
        raise DataError("kernel matrix is not symmetric")
    Kc = center_kernel(K)
    Kc = 0.5 * (Kc + Kc.T)
    lam, U = np.linalg.eigh(Kc)
    order = np.argsort(-lam, kind="stable")
    lam, U = lam[order], U[:, order]
    keep = lam > eps_npt
    if not keep.any():
        raise NumericalError("degenerate kernel: no centered eigenvalue above the floor")
    lam, U = lam[keep], sign_normalize(U[:, keep].T).T
    Phi = np.sqrt(lam)[:, None] * U.T
    if train_data is None:
        train_data = np.empty((K.shape[0], 0))
    state = NptState(
        np.array(train_data, float),
        float(sigma),
        K.mean(axis=1),
        float(K.mean()),
        U,
        lam,
    )
    return Phi, state


def npt_map_kernel(k_star, state: NptState) -> np.ndarray:
    """Map test-vs-train kernel rows (M x N) to coordinates (M x r)."""
    k_star = np.atleast_2d(np.asarray(k_star, float))
    n = state.kernel_row_means.shape[0]
    if k_star.shape[1] != n:
        raise DataError(f"kernel row length {k_star.shape[1]} does not match {n} training points")
    kc = (
        k_star
        - k_star.mean(axis=1, keepdims=True)
        - state.kernel_row_means[None, :]
        + state.kernel_grand_mean
    )
    return (kc @ state.eigvecs) / np.sqrt(state.eigvals)


def npt_map(x_star, state: NptState) -> np.ndarray:
    """Coordinates of raw input vector(s) in the fitted kernel space."""
    x = np.asarray(x_star, float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != state.input_dim:
        raise DataError(f"dimension mismatch: expected {state.input_dim}, got {x.shape[1]}")
    phi = npt_map_kernel(rbf_kernel(x, state.train_data, state.sigma), state)
    return phi[0] if single else phi


def npt_residual(x_star, state: NptState) -> np.ndarray:
    """Squared norm of the centered feature vector outside the retained span.

    Adding this to distances between mapped coordinates recovers exact
    kernel-space distances for test points.
    """
    x = np.atleast_2d(np.asarray(x_star, float))
    k_star = rbf_kernel(x, state.train_data, state.sigma)
    # k(x, x) = 1 for the RBF kernel
    full = 1.0 - 2.0 * k_star.mean(axis=1) + state.kernel_grand_mean
    phi = npt_map_kernel(k_star, state)
    return np.maximum(full - np.einsum("ij,ij->i", phi, phi), 0.0)


def fit_rbf_npt(X, sigma: float, eps_npt=EPS_NPT):
    """Convenience: RBF kernel on ``X`` followed by :func:`npt_fit`.

    Returns training coordinates as rows (N x r) and the state.
    """
    X = np.asarray(X, float)
    Phi, state = npt_fit(rbf_kernel(X, X, sigma), eps_npt, train_data=X, sigma=sigma)
    return Phi.T.copy(), state
