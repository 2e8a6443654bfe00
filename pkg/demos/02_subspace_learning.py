"""Learn a low-dimensional projection jointly with the description.

Targets live on a 2-D plane inside 10 features; outliers form a ring in
that plane.  The graph-embedded model finds the plane and separates them.
"""
import numpy as np

from subocc.dataio import TransactionTable
from subocc.evaluation import gmean
from subocc.subspace import TrainConfig, predict, train

# %% data
rng = np.random.default_rng(1)
A = rng.normal(size=(2, 10))


def sample(n_t, n_o):
    th = rng.uniform(0, 2 * np.pi, n_o)
    r = rng.uniform(4, 6, n_o)
    Z = np.r_[rng.normal(size=(n_t, 2)), np.c_[r * np.cos(th), r * np.sin(th)]]
    X = Z @ A + 0.1 * rng.normal(size=(n_t + n_o, 10))
    return X, np.r_[np.zeros(n_t, int), np.ones(n_o, int)]


X_train, _ = sample(200, 0)
X_test, y_test = sample(150, 50)
targets = TransactionTable(X_train, np.zeros(len(X_train), int))

# %% a few variants at d = 2
for name in ("svdd", "gessvdd-knn-g-min", "gessvdd-pca-e-min", "ssvdd-psi1-min"):
    cfg = TrainConfig(name, C=0.1, d=2, eta=0.1, beta=0.1)
    model = train(cfg, targets)
    _, labels = predict(model, X_test)
    print(f"{name:<20} G-mean {gmean(y_test, labels):.3f}")

# %% the criterion over iterations of the gradient solver
model = train(TrainConfig("gessvdd-knn-g-min", C=0.1, d=2, eta=0.1, iterations=10), targets)
print("criterion trace:", np.round(model.criterion_trace, 4))
print("learned projection rows:\n", np.round(model.projection.Q, 3))
