"""Fit a data description to a 2-D Gaussian cloud and inspect the sphere."""
import numpy as np

from subocc.svdd import fit_sphere, linear_gram, solve_dual

# %% a small target sample
rng = np.random.default_rng(0)
P = rng.normal(size=(200, 2))

# %% the dual solution partitions training points by their multiplier
sol = solve_dual(linear_gram(P), C=0.07)
print("sum(alpha) =", sol.alpha.sum())
print("support / boundary-outside / inside:",
      sol.support_idx.size, sol.outside_idx.size, sol.inside_idx.size)

# %% the sphere itself: centre, radius and a signed score
model = fit_sphere(P, C=0.07)
print("centre", np.round(model.center, 3), "radius", round(model.radius, 3))
probe = np.array([[0.0, 0.0], [2.0, 0.0], [6.0, 6.0]])
print("scores (positive = outside):", np.round(model.score(probe), 3))

# %% smaller C lets more points fall outside (at most 1/C of them)
for C in (0.02, 0.07, 0.2, 1.0):
    m = fit_sphere(P, C)
    frac = float(np.mean(m.score(P) > 1e-9))
    print(f"C={C:<5} radius={m.radius:.3f} outside fraction={frac:.3f}")
