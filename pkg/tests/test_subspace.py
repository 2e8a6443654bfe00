import numpy as np
import pytest
import scipy.stats
from numpy.testing import assert_allclose, assert_array_equal

from oracles import central_fd, ring_problem
from subocc.dataio import TransactionTable
from subocc.errors import NumericalError, UsageError
from subocc.graphs import build_laplacian, knn_adjacency, knn_laplacian, pca_laplacian
from subocc.persistence import dumps
from subocc.subspace import (
    TrainConfig,
    alpha_laplacian,
    alpha_scatter,
    gradient_update,
    init_projection,
    predict,
    psi_regularizer,
    q_criterion,
    q_gradient,
    scatter_from_graph,
    spectral_regression_targets,
    spectral_regression_update,
    spectral_update,
    ssvdd_criterion,
    train,
    whitener,
)
from subocc.svdd import fit_sphere, partition_alphas


def _orth(rng, d, D):
    return np.linalg.qr(rng.normal(size=(D, d)))[0].T


def _simplex(rng, n):
    a = rng.random(n)
    return a / a.sum()


def test_init_projection_dominant_axis():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 4)) * [10.0, 1.0, 1.0, 1.0]
    Q = init_projection(X, 1)
    assert Q[0, 0] > 0.99
    Q = init_projection(X, 4)
    assert_allclose(Q @ Q.T, np.eye(4), atol=1e-10)


def test_init_projection_tie_order():
    X = np.array([[1.0, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]])
    assert_allclose(init_projection(X, 2), [[1, 0, 0], [0, 1, 0]], atol=1e-12)


def test_scatter_examples():
    X = np.random.default_rng(1).normal(size=(5, 3))
    assert_allclose(scatter_from_graph(X, np.eye(5)), X.T @ X)
    assert_allclose(scatter_from_graph(np.array([[1.0], [-1.0]]), pca_laplacian(2)), [[1.0]])
    same = np.tile([[1.0, 2.0]], (4, 1))
    L = knn_laplacian(knn_adjacency(same, 2))
    assert_allclose(scatter_from_graph(same, L), np.zeros((2, 2)), atol=1e-12)


def test_whitener_examples():
    assert_allclose(whitener(np.diag([4.0, 1.0])), np.diag([0.5, 1.0]), atol=1e-12)
    assert_allclose(whitener(np.zeros((2, 2))), 1000.0 * np.eye(2), rtol=1e-12)
    A = np.random.default_rng(2).normal(size=(4, 4))
    S = A @ A.T + 0.1 * np.eye(4)
    W = whitener(S)
    assert_allclose(W @ S @ W, np.eye(4), atol=1e-6)


def test_criterion_single_point():
    X = np.array([[1.0, 2.0]])
    L = alpha_laplacian([1.0])
    assert_array_equal(L, [[0.0]])
    assert q_criterion(np.array([[1.0, 0.0]]), X, L, np.eye(2)) == 0.0


def test_criterion_naive_summation():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(10, 4))
    Q = _orth(rng, 2, 4)
    a = np.full(10, 0.1)
    S_x = X.T @ X
    J = q_criterion(Q, X, alpha_laplacian(a), S_x)
    W = whitener(Q @ S_x @ Q.T)
    P = X @ Q.T @ W
    naive = sum(a[i] * P[i] @ P[i] for i in range(10)) - np.sum((a @ P) ** 2)
    assert J == pytest.approx(naive, rel=1e-10)


def test_criterion_rotation_invariant():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(12, 5))
    Q = rng.normal(size=(3, 5))
    L = alpha_laplacian(_simplex(rng, 12))
    S_x = X.T @ build_laplacian("knn", X, 3) @ X
    U = scipy.stats.special_ortho_group.rvs(3, random_state=5)
    assert q_criterion(U @ Q, X, L, S_x) == pytest.approx(q_criterion(Q, X, L, S_x), abs=1e-8)


def test_alpha_scatter_matches_dense():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(9, 3))
    a = _simplex(rng, 9)
    assert_allclose(alpha_scatter(X, a), X.T @ alpha_laplacian(a) @ X, atol=1e-12)


def test_gessvdd_gradient_fd():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(12, 5))
    Q = rng.normal(size=(2, 5))
    L = alpha_laplacian(_simplex(rng, 12))
    S_x = X.T @ build_laplacian("knn", X, 3) @ X
    G = q_gradient(Q, X, L, S_x)
    F = central_fd(lambda q: q_criterion(q, X, L, S_x), Q)
    assert np.linalg.norm(G - F) / np.linalg.norm(F) <= 1e-4


@pytest.mark.parametrize("psi", [0, 1, 2, 3])
def test_ssvdd_gradient_fd(psi):
    rng = np.random.default_rng(8 + psi)
    X = rng.normal(size=(10, 4))
    Q = rng.normal(size=(2, 4))
    a = _simplex(rng, 10)
    _, Fm = psi_regularizer(psi, X, a, 0.3)
    L = alpha_laplacian(a)
    G = q_gradient(Q, X, L, psi_factor=Fm, beta=0.7)
    F = central_fd(lambda q: ssvdd_criterion(q, X, L, Fm, 0.7), Q)
    assert np.linalg.norm(G - F) / np.linalg.norm(F) <= 1e-4


def test_gradient_vanishes_at_spectral_solution():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(15, 4))
    L = alpha_laplacian(_simplex(rng, 15))
    S_x = X.T @ X
    M = X.T @ L @ X
    Q = spectral_update(M, S_x, 2, "max", eps=0.0)
    assert np.linalg.norm(q_gradient(Q, X, L, S_x)) <= 1e-6


def test_zero_alpha_laplacian_zero_gradient():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(6, 3))
    Q = rng.normal(size=(2, 3))
    Z = np.zeros((6, 6))
    assert_array_equal(q_gradient(Q, X, Z, X.T @ X), 0.0)
    assert_array_equal(q_gradient(Q, X, Z), 0.0)


def test_gradient_update_direction():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(12, 4))
    L = alpha_laplacian(_simplex(rng, 12))
    S_x = X.T @ X
    Q = _orth(rng, 2, 4)
    assert_allclose(gradient_update(Q, rng.normal(size=Q.shape), 0.0, "min", orthonormalize=True), Q, atol=1e-12)
    G = q_gradient(Q, X, L, S_x)
    J0 = q_criterion(Q, X, L, S_x)
    assert q_criterion(gradient_update(Q, G, 1e-3, "min"), X, L, S_x) <= J0
    assert q_criterion(gradient_update(Q, G, 1e-3, "max"), X, L, S_x) >= J0
    with pytest.raises(NumericalError):
        gradient_update(Q, np.full(Q.shape, np.nan), 1.0, "min", iteration=3)
    with pytest.raises(UsageError):
        gradient_update(Q, G, 1.0, "up")


def test_spectral_diagonal_case():
    M = np.diag([3.0, 1.0, 0.5])
    Q = spectral_update(M, np.eye(3), 2, "max", eps=0.0)
    assert_allclose(np.abs(Q), [[1, 0, 0], [0, 1, 0]], atol=1e-12)
    Q = spectral_update(M, np.eye(3), 2, "min", eps=0.0)
    assert_allclose(np.abs(Q), [[0, 0, 1], [0, 1, 0]], atol=1e-12)


def test_spectral_rayleigh_oracle():
    rng = np.random.default_rng(12)
    X = rng.normal(size=(20, 5))
    M = X.T @ alpha_laplacian(_simplex(rng, 20)) @ X
    S = X.T @ pca_laplacian(20) @ X
    q = spectral_update(M, S, 1, "max")[0]
    best = (q @ M @ q) / (q @ S @ q)
    V = rng.normal(size=(1000, 5))
    ratios = np.einsum("ij,jk,ik->i", V, M, V) / np.einsum("ij,jk,ik->i", V, S, V)
    assert best >= ratios.max() - 1e-9


def test_spectral_padding_warns(caplog):
    M = np.diag([1.0, 0.0, 0.0])
    with caplog.at_level("WARNING"):
        Q = spectral_update(M, np.eye(3), 2, "max", eps=0.0)
    assert Q.shape == (2, 3)
    assert "padding" in caplog.text


def test_spectral_regression_interpolates():
    rng = np.random.default_rng(13)
    X = rng.normal(size=(4, 4))
    La = alpha_laplacian(_simplex(rng, 4))
    Lx = knn_laplacian(knn_adjacency(X, 2))
    _, T = spectral_regression_targets(La, Lx, 2, "max")
    Q = spectral_regression_update(La, Lx, X, 2, "max", ridge=1e-12)
    assert_allclose(X @ Q.T, T, atol=1e-6)


def test_spectral_regression_large_ridge():
    rng = np.random.default_rng(14)
    X = rng.normal(size=(8, 3))
    La = alpha_laplacian(_simplex(rng, 8))
    Lx = pca_laplacian(8)
    _, T = spectral_regression_targets(La, Lx, 2, "max")
    ridge = 1e8
    Q = spectral_regression_update(La, Lx, X, 2, "max", ridge=ridge)
    assert_allclose(Q, (X.T @ T).T / ridge, rtol=1e-6)


def test_spectral_regression_eigenvalues_dense_oracle():
    rng = np.random.default_rng(15)
    X = rng.normal(size=(8, 3))
    a = _simplex(rng, 8)
    La = alpha_laplacian(a)
    Lx = knn_laplacian(knn_adjacency(X, 3))
    eps = 1e-6
    B = Lx + eps * np.eye(8)
    w, V = np.linalg.eigh(B)
    Bh = V @ np.diag(w**-0.5) @ V.T
    ref = np.linalg.eigvalsh(Bh @ La @ Bh)
    lam, _ = spectral_regression_targets(La, Lx, 3, "max", eps)
    pos = np.sort(ref[ref > 1e-10 * np.abs(ref).max()])[::-1][:3]
    assert_allclose(lam, pos, rtol=1e-8)


def test_psi_variants():
    X = np.array([[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]])
    a = np.array([0.0, 0.3, 0.5])
    lam, F = psi_regularizer(0, X, a, 0.5)
    assert_array_equal(lam, 0.0)
    assert_array_equal(F, 0.0)
    lam, F = psi_regularizer(1, X, a, 0.5)
    assert_array_equal(lam, [1, 1, 1])
    v = X.T @ np.ones(3)
    assert_allclose(F, np.outer(v, v))
    lam, _ = psi_regularizer(2, X, a, 0.5)
    assert_allclose(lam, [0.0, 0.3, 0.0])
    _, sv, _ = partition_alphas(a, 0.5)
    assert_array_equal(np.flatnonzero(lam), sv)
    lam, _ = psi_regularizer(3, X, a, 0.5)
    assert_allclose(lam, [0.0, 0.3, 0.5])
    with pytest.raises(UsageError):
        psi_regularizer(4, X, a, 0.5)


def _targets(rng, n=40, D=4):
    X = rng.normal(size=(n, D)) * np.linspace(3, 1, D)
    return TransactionTable(X, np.zeros(n, int))


@pytest.mark.parametrize("spec", ["ssvdd-psi0-min", "gessvdd-knn-g-max", "gessvdd-pca-e-min", "gessvdd-i-s-max"])
def test_zero_iterations_reduce_to_pca_svdd(spec):
    rng = np.random.default_rng(16)
    tab = _targets(rng)
    m = train(TrainConfig(spec, C=0.2, d=2, iterations=0), tab)
    Z = (tab.features - tab.features.mean(0)) / tab.features.std(0, ddof=1)
    P = Z @ init_projection(Z, 2).T
    if spec.startswith("gessvdd"):
        L = build_laplacian(m.config.spec.graph, Z, 5)
        P = P @ whitener(init_projection(Z, 2) @ (Z.T @ L @ Z) @ init_projection(Z, 2).T)
    ref = fit_sphere(P, 0.2)
    assert_allclose(m.sphere.dual.alpha, ref.dual.alpha, atol=1e-8)


def test_trained_model_scoring_properties():
    rng = np.random.default_rng(17)
    tab = _targets(rng, 60, 3)
    for spec in ("gessvdd-knn-g-min", "ssvdd-psi2-max", "svdd"):
        cfg = TrainConfig(spec, C=0.1, d=2, eta=0.1, beta=0.1)
        m = train(cfg, tab)
        s, lab = predict(m, tab)
        assert (s > 1e-9).sum() <= 1 / cfg.C + 1e-9
        sv = m.sphere.dual.support_idx
        assert np.abs(s[sv]).max() <= 1e-5
        assert m.score(np.full((1, 3), 1e6))[0] > 0


def test_linear_ocsvm_nu_bound():
    rng = np.random.default_rng(20)
    tab = TransactionTable(rng.normal(size=(80, 2)) + 5.0, np.zeros(80, int))
    m = train(TrainConfig("ocsvm", C=0.2), tab)
    s, _ = predict(m, tab)
    assert np.mean(s > 1e-9) <= 0.2 + 1e-9


def test_kernel_svdd_far_point_is_outlier():
    rng = np.random.default_rng(18)
    tab = _targets(rng, 50, 2)
    m = train(TrainConfig("svdd-rbf", C=0.2, sigma=1.0), tab)
    assert m.score(np.full((1, 2), 1e6))[0] > 0
    s = m.score(tab.features)
    assert np.abs(s[m.sphere.dual.support_idx]).max() <= 1e-5


def test_training_is_deterministic():
    rng = np.random.default_rng(19)
    tab = _targets(rng, 30, 3)
    cfg = TrainConfig("gessvdd-knn-g-min", C=0.2, d=2, eta=0.1)
    assert dumps(train(cfg, tab)) == dumps(train(cfg, tab))
    cfg = TrainConfig("gessvdd-pca-e-max-rbf", C=0.2, d=2, sigma=2.0)
    assert dumps(train(cfg, tab)) == dumps(train(cfg, tab))


def test_train_rejects_outlier_rows():
    tab = TransactionTable(np.zeros((3, 2)), [0, 1, 0])
    with pytest.raises(Exception, match="target-class"):
        train(TrainConfig("svdd"), tab)


def test_config_validation():
    with pytest.raises(UsageError):
        TrainConfig("svdd-rbf")
    with pytest.raises(UsageError):
        TrainConfig("gessvdd-knn-g-min", d=0)
    with pytest.raises(UsageError):
        TrainConfig("svdd", C=0.0)


@pytest.mark.parametrize(
    "spec",
    ["gessvdd-knn-e-min", "gessvdd-pca-s-max", "gessvdd-i-g-min", "ssvdd-psi1-min", "ssvdd-psi3-max",
     "esvdd", "ocsvm-rbf", "gessvdd-knn-s-min-rbf", "ssvdd-psi2-min-rbf", "esvdd-rbf"],
)
def test_all_families_separate_ring(spec):
    Xtr, ytr, Xte, yte = ring_problem(0, n_train=120, n_test=80, n_out_test=40)
    tab = TransactionTable(Xtr[ytr == 0], np.zeros((ytr == 0).sum(), int))
    cfg = TrainConfig(spec, C=0.1, d=2, eta=0.1, beta=0.01, sigma=10.0 if spec.endswith("rbf") else None)
    _, lab = predict(train(cfg, tab), Xte)
    assert np.mean(lab == yte) > 0.8
