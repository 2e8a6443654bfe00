"""Support vector data description on an explicit representation.

The dual

    max_a  sum_i a_i K_ii - a^T K a    s.t.  sum_i a_i = 1,  0 <= a_i <= C

is solved by sequential minimal optimization: at every step the pair with
the largest KKT violation exchanges mass in closed form.  Once the violation
drops below ``tol`` the free coordinates are re-solved exactly on their face,
which removes most of the residual left by the stopping rule.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DataError, NumericalError
from .linalg import freeze_contiguous

KKT_TOL = 1e-6
PARTITION_TOL = 1e-6
MAX_ITER = 10_000


def linear_gram(P) -> np.ndarray:
    P = np.asarray(P, float)
    if P.ndim == 1:
        P = P[:, None]
    if not np.all(np.isfinite(P)):
        raise NumericalError("non-finite entries in representation")
    K = P @ P.T
    return 0.5 * (K + K.T)


@dataclass(frozen=True)
class SimplexQPResult:
    alpha: np.ndarray
    gap: float
    iterations: int
    history: list = field(default_factory=list)


def _objective(alpha, g, p):
    # 0.5 a^T H a + p^T a, using g = H a + p
    return 0.5 * float(alpha @ (g + p))


def _polish(H, p, C, alpha, g, tol, gap):
    """Solve the equality-constrained problem on the current face exactly."""
    free = (alpha > 0.0) & (alpha < C)
    nf = int(free.sum())
    if nf < 2:
        return alpha, g, gap
    fixed = ~free
    rhs = -p[free] - H[np.ix_(free, fixed)] @ alpha[fixed]
    A = np.zeros((nf + 1, nf + 1))
    A[:nf, :nf] = H[np.ix_(free, free)]
    A[:nf, nf] = 1.0
    A[nf, :nf] = 1.0
    b = np.append(rhs, 1.0 - alpha[fixed].sum())
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    if not np.allclose(A @ sol, b, rtol=0.0, atol=1e-10 * max(1.0, np.abs(b).max())):
        return alpha, g, gap
    a_f = sol[:nf]
    slack = 1e-12
    if np.any(a_f < -slack) or np.any(a_f > C + slack):
        return alpha, g, gap
    cand = alpha.copy()
    cand[free] = np.clip(a_f, 0.0, C)
    g_new = H @ cand + p
    gap_new = _kkt_gap(cand, g_new, C)
    if gap_new > max(tol, gap) or _objective(cand, g_new, p) > _objective(alpha, g, p):
        return alpha, g, gap
    return cand, g_new, gap_new


def _kkt_gap(alpha, g, C):
    up = alpha < C
    down = alpha > 0.0
    if not up.any() or not down.any():
        return 0.0
    return float(np.max(g[down]) - np.min(g[up]))


def solve_simplex_qp(H, p, C, tol=KKT_TOL, max_iter=MAX_ITER, record=False) -> SimplexQPResult:
    """Minimize ``0.5 a^T H a + p^T a`` over ``sum(a) = 1, 0 <= a <= C``.

    Shared by the SVDD dual (H = 2K, p = -diag K) and the one-class SVM dual
    (H = K, p = 0).  Starts from the uniform point, which is feasible
    whenever ``N * C >= 1``.
    """
    H = np.asarray(H, float)
    p = np.asarray(p, float)
    n = p.shape[0]
    alpha = np.full(n, 1.0 / n)
    g = H @ alpha + p
    diag = np.diag(H).copy()
    history = [_objective(alpha, g, p)] if record else []
    inf = np.inf
    gap = inf
    it = 0
    while True:
        up = alpha < C
        down = alpha > 0.0
        i = int(np.argmin(np.where(up, g, inf)))
        j = int(np.argmax(np.where(down, g, -inf)))
        gap = float(g[j] - g[i]) if up[i] and down[j] else 0.0
        if gap <= tol:
            break
        if it >= max_iter:
            raise ConvergenceError(
                f"SMO did not converge in {max_iter} pair updates (KKT residual {gap:.3e})",
                residual=gap,
                iterations=it,
            )
        # move t units of mass from j to i
        curv = diag[i] + diag[j] - 2.0 * H[i, j]
        t_max = min(C - alpha[i], alpha[j])
        t = t_max if curv <= 1e-15 else min(gap / curv, t_max)
        if t == C - alpha[i]:
            alpha[i] = C
        else:
            alpha[i] += t
        if t == alpha[j]:
            alpha[j] = 0.0
        else:
            alpha[j] -= t
        g += t * (H[i] - H[j])  # H symmetric; rows are contiguous
        it += 1
        if record:
            history.append(_objective(alpha, g, p))
    alpha, g, gap = _polish(H, p, C, alpha, g, tol, gap)
    if record:
        history.append(_objective(alpha, g, p))
    if not np.all(np.isfinite(alpha)):
        raise NumericalError("non-finite dual variables")
    return SimplexQPResult(alpha, gap, it, history)


def partition_alphas(alpha, C, tol=PARTITION_TOL):
    """Split indices into (inside, support, outside).

    inside: a <= tol; support: tol < a < C - tol; outside: a >= C - tol.
    A value exactly at C - tol/2 therefore counts as outside.  When
    ``C - tol <= tol`` the support band is empty.
    """
    alpha = np.asarray(alpha, float)
    inside = alpha <= tol
    outside = ~inside & (alpha >= C - tol)
    support = ~inside & ~outside
    return np.flatnonzero(inside), np.flatnonzero(support), np.flatnonzero(outside)


@dataclass(frozen=True)
class DualSolution:
    alpha: np.ndarray
    C: float
    inside_idx: np.ndarray
    support_idx: np.ndarray
    outside_idx: np.ndarray
    objective: float
    kkt_gap: float = 0.0
    iterations: int = 0
    history: list = field(default_factory=list, repr=False)


def _check_square_symmetric(K):
    K = np.asarray(K, float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DataError(f"Gram matrix must be square, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise NumericalError("non-finite entries in Gram matrix")
    scale = max(1.0, float(np.abs(K).max()))
    if np.abs(K - K.T).max() > 1e-9 * scale:
        raise DataError("Gram matrix is not symmetric")
    return K


def solve_dual(K, C, tol=KKT_TOL, max_iter=MAX_ITER, partition_tol=PARTITION_TOL, record=False) -> DualSolution:
    K = _check_square_symmetric(K)
    n = K.shape[0]
    if n * C < 1.0 - 1e-12:
        raise DataError(f"infeasible dual: N*C = {n * C:g} < 1")
    diag = np.diag(K)
    res = solve_simplex_qp(2.0 * K, -diag, C, tol=tol, max_iter=max_iter, record=record)
    a = res.alpha
    inside, support, outside = partition_alphas(a, C, partition_tol)
    obj = float(a @ diag - a @ K @ a)
    # history is stored as the maximized dual objective
    hist = [-v for v in res.history]
    return DualSolution(a, float(C), inside, support, outside, obj, res.gap, res.iterations, hist)


def _sq_dist_to_center(P, u):
    diff = P - u
    return np.einsum("ij,ij->i", diff, diff)


def radius(solution: DualSolution, P) -> float:
    """Sphere radius: mean distance from the center over support vectors.

    Without support vectors every multiplier sits at a bound and any radius
    between the farthest inside point and the nearest outside point is
    optimal; the midpoint of that interval is returned (or the nearest
    outside distance when nothing is inside).
    """
    P = np.asarray(P, float)
    if P.ndim == 1:
        P = P[:, None]
    u = P.T @ solution.alpha
    d = np.sqrt(np.maximum(_sq_dist_to_center(P, u), 0.0))
    if solution.support_idx.size:
        return float(d[solution.support_idx].mean())
    if solution.outside_idx.size == 0:
        raise NumericalError("cannot determine radius: no support and no outside points")
    r_out = float(d[solution.outside_idx].min())
    if solution.inside_idx.size == 0:
        return r_out
    r_in = float(d[solution.inside_idx].max())
    return 0.5 * (r_in + max(r_out, r_in))


@dataclass(frozen=True)
class SphereModel:
    dual: DualSolution
    train_repr: np.ndarray
    center: np.ndarray
    radius: float

    def __post_init__(self):
        freeze_contiguous(self, ("train_repr", "center"))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def score(self, Z) -> np.ndarray:
        """Squared distance to the center minus R^2; > 0 means outlier."""
        Z = np.asarray(Z, float)
        single = Z.ndim == 1
        Z = np.atleast_2d(Z)
        if Z.shape[1] != self.dim:
            raise DataError(f"dimension mismatch: expected {self.dim}, got {Z.shape[1]}")
        s = _sq_dist_to_center(Z, self.center) - self.radius**2
        return s[0] if single else s

    def predict(self, Z) -> np.ndarray:
        return (np.atleast_1d(self.score(Z)) > 0).astype(np.int64)


def score(x_star, model: SphereModel):
    return model.score(x_star)


def fit_sphere(P, C, tol=KKT_TOL, max_iter=MAX_ITER, partition_tol=PARTITION_TOL) -> SphereModel:
    P = np.asarray(P, float)
    if P.ndim == 1:
        P = P[:, None]
    sol = solve_dual(linear_gram(P), C, tol=tol, max_iter=max_iter, partition_tol=partition_tol)
    return sphere_from_solution(sol, P)


def sphere_from_solution(sol: DualSolution, P) -> SphereModel:
    P = np.asarray(P, float)
    if P.ndim == 1:
        P = P[:, None]
    center = P.T @ sol.alpha
    return SphereModel(sol, P.copy(), center, radius(sol, P))
