import numpy as np
import pytest
from numpy.testing import assert_allclose

from subocc.errors import NumericalError, UsageError
from subocc.kernelization import center_kernel, fit_rbf_npt, npt_fit, npt_map, npt_map_kernel, rbf_kernel


def test_rbf_values():
    x = np.array([[0.3, -1.0]])
    assert rbf_kernel(x, x, 0.7)[0, 0] == 1.0
    sigma = 1.5
    y = x + [np.sqrt(2) * sigma, 0.0]
    assert rbf_kernel(x, y, sigma)[0, 0] == pytest.approx(np.exp(-1.0), rel=1e-12)
    assert rbf_kernel(x, y, sigma)[0, 0] == pytest.approx(0.367879, abs=1e-6)
    z = np.array([[1.0, 2.0]])
    assert rbf_kernel(x, z, 1e3) > rbf_kernel(x, z, 1e2)
    with pytest.raises(UsageError):
        rbf_kernel(x, x, 0.0)


def test_identity_kernel_centering():
    Phi, state = npt_fit(np.eye(3))
    assert_allclose(np.sort(np.linalg.eigvalsh(center_kernel(np.eye(3)))), [0, 1, 1], atol=1e-12)
    assert state.rank == 2
    assert_allclose(Phi.T @ Phi, center_kernel(np.eye(3)), atol=1e-10)


def test_constant_kernel_degenerate():
    with pytest.raises(NumericalError, match="degenerate"):
        npt_fit(np.ones((4, 4)))


def test_random_rbf_reconstruction_and_training_map():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(15, 3))
    K = rbf_kernel(X, X, 1.3)
    Phi, state = npt_fit(K, train_data=X, sigma=1.3)
    assert np.abs(Phi.T @ Phi - center_kernel(K)).max() <= 1e-8
    assert_allclose(npt_map(X, state), Phi.T, atol=1e-6)
    assert_allclose(npt_map(X[4], state), Phi[:, 4], atol=1e-6)


def test_far_point_maps_to_centered_origin():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(10, 2))
    coords, state = fit_rbf_npt(X, 1.0)
    far = npt_map(np.full(2, 1e6), state)
    origin = npt_map_kernel(np.zeros((1, 10)), state)[0]
    assert np.all(np.isfinite(far))
    assert_allclose(far, origin, atol=1e-12)


def test_map_is_stateless():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(12, 2))
    _, state = fit_rbf_npt(X, 0.8)
    a, b = rng.normal(size=(2, 2))
    ab = npt_map(np.array([a, b]), state)
    ba = npt_map(np.array([b, a]), state)
    assert_allclose(ab[::-1], ba, atol=1e-14)


def test_train_coordinates_preserve_distances():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(8, 2))
    coords, _ = fit_rbf_npt(X, 1.0)
    K = rbf_kernel(X, X, 1.0)
    d_kernel = np.diag(K)[:, None] + np.diag(K)[None, :] - 2 * K
    d_coords = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(-1)
    assert_allclose(d_coords, d_kernel, atol=1e-9)
