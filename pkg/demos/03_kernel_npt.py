"""Explicit coordinates for an RBF kernel via the non-linear projection trick."""
import numpy as np

from subocc.kernelization import center_kernel, npt_fit, npt_map, rbf_kernel
from subocc.subspace import TrainConfig, train

# %% the explicit map reproduces the centred kernel
rng = np.random.default_rng(2)
X = rng.normal(size=(60, 3))
K = rbf_kernel(X, X, sigma=2.0)
Phi, state = npt_fit(K, train_data=X, sigma=2.0)
print("rank", state.rank, "max reconstruction error",
      np.abs(Phi.T @ Phi - center_kernel(K)).max())

# %% new points are mapped with the same coordinates
print("training map error", np.abs(npt_map(X, state) - Phi.T).max())

# %% a kernel description separates a ring from its centre
th = rng.uniform(0, 2 * np.pi, 200)
ring = np.c_[5 * np.cos(th), 5 * np.sin(th)] + 0.2 * rng.normal(size=(200, 2))
model = train(TrainConfig("svdd-rbf", C=0.1, sigma=0.5), ring)
probe = np.array([[0.0, 0.0], [5.0, 0.0], [0.0, -5.0], [20.0, 20.0]])
print("scores at centre, on ring, on ring, far away:", np.round(model.score(probe), 3))
