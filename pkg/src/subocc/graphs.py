"""Graph matrices used to build the scatter S_x = X^T L X.

All Laplacians are N x N, indexed by training sample.
"""
import numpy as np
from scipy.spatial.distance import cdist

from .errors import UsageError

GRAPHS = ("identity", "pca", "knn")
DEFAULT_K = 5


def identity_laplacian(n: int) -> np.ndarray:
    if n < 1:
        raise UsageError("n must be >= 1")
    return np.eye(n)


def pca_laplacian(n: int) -> np.ndarray:
    """Centering matrix scaled by 1/n, so that X^T L X = S_t / n."""
    if n < 1:
        raise UsageError("n must be >= 1")
    return (np.eye(n) - np.full((n, n), 1.0 / n)) / n


def knn_adjacency(X, k: int = DEFAULT_K) -> np.ndarray:
    """Symmetric k-nearest-neighbour adjacency (OR rule), zero diagonal.

    Neighbours are ranked by squared Euclidean distance with ties going to
    the lowest row index.
    """
    X = np.asarray(X, float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if not 1 <= k <= n - 1:
        raise UsageError(f"k must satisfy 1 <= k <= N-1 = {n - 1}, got {k}")
    dist = cdist(X, X, "sqeuclidean")
    np.fill_diagonal(dist, np.inf)
    # stable sort keeps the lowest index first among equal distances
    nbrs = np.argsort(dist, axis=1, kind="stable")[:, :k]
    A = np.zeros((n, n))
    A[np.repeat(np.arange(n), k), nbrs.ravel()] = 1.0
    A = np.maximum(A, A.T)
    np.fill_diagonal(A, 0.0)
    return A


def knn_laplacian(A) -> np.ndarray:
    A = np.asarray(A, float)
    return np.diag(A.sum(axis=1)) - A


def build_laplacian(kind: str, X, k: int = DEFAULT_K) -> np.ndarray:
    n = np.asarray(X).shape[0]
    if kind == "identity":
        return identity_laplacian(n)
    if kind == "pca":
        return pca_laplacian(n)
    if kind == "knn":
        return knn_laplacian(knn_adjacency(X, k))
    raise UsageError(f"unknown graph {kind!r}")
