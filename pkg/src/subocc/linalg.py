"""Small dense linear-algebra helpers shared across modules."""
import numpy as np

EIG_FLOOR = 1e-6


def sign_normalize(V, tol=1e-12) -> np.ndarray:
    """Flip rows of ``V`` so the first non-negligible entry is positive."""
    V = np.array(V, float, copy=True)
    for r in range(V.shape[0]):
        row = V[r]
        nz = np.flatnonzero(np.abs(row) > tol * max(1.0, np.abs(row).max()))
        if nz.size and row[nz[0]] < 0:
            V[r] = -row
    return V


def descending_order(lam, V, rtol=1e-12) -> np.ndarray:
    """Indices sorting eigenpairs by descending eigenvalue.

    Eigenvalues equal within ``rtol`` are ordered by the position of their
    vector's largest-magnitude entry, lowest feature index first.
    """
    lam = np.asarray(lam, float)
    tol = rtol * max(float(np.abs(lam).max(initial=0.0)), 1e-300)
    order = list(np.argsort(-lam, kind="stable"))
    lead = np.argmax(np.abs(V), axis=0)
    out, start = [], 0
    while start < len(order):
        stop = start + 1
        while stop < len(order) and lam[order[start]] - lam[order[stop]] <= tol:
            stop += 1
        group = order[start:stop]
        out.extend(sorted(group, key=lambda j: (lead[j], j)))
        start = stop
    return np.array(out, dtype=np.int64)


def freeze_contiguous(obj, names) -> None:
    """Store the named array fields of a frozen dataclass as C-contiguous.

    Saved models are read back C-contiguous; matching that layout in memory
    keeps BLAS results bit-identical across a save/load round trip.
    """
    for name in names:
        object.__setattr__(obj, name, np.ascontiguousarray(getattr(obj, name), dtype=float))


def sym(A) -> np.ndarray:
    A = np.asarray(A, float)
    return 0.5 * (A + A.T)


def floored_eigh(S, eps=EIG_FLOOR):
    lam, V = np.linalg.eigh(sym(S))
    return np.maximum(lam, eps), V


def inv_sqrt(S, eps=EIG_FLOOR) -> np.ndarray:
    lam, V = floored_eigh(S, eps)
    return (V / np.sqrt(lam)) @ V.T


def floored_inv(S, eps=EIG_FLOOR) -> np.ndarray:
    lam, V = floored_eigh(S, eps)
    return (V / lam) @ V.T


def orthonormalize_rows(Q) -> np.ndarray:
    """Thin QR of Q^T with a positive diagonal, so orthonormal input is a fixed point."""
    Q = np.asarray(Q, float)
    q, r = np.linalg.qr(Q.T)
    s = np.sign(np.diag(r))
    s[s == 0] = 1.0
    return (q * s).T
