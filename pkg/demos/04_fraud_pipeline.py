"""End-to-end run of the command-line pipeline on a synthetic fraud table.

Writes a CSV in the layout of the public credit-card data (Time, features,
Class), a config file, then trains, scores and benchmarks through the CLI.
"""
import sys
import tempfile
from pathlib import Path

import numpy as np

from subocc.cli import main

work = Path(tempfile.mkdtemp(prefix="subocc-demo-"))
rng = np.random.default_rng(3)

# %% a table with 1000 normal and 80 fraudulent transactions
n_t, n_o = 1000, 80
normal = rng.normal(size=(n_t, 4))
fraud = rng.normal(size=(n_o, 4)) * 0.5 + rng.choice([-4, 4], size=(n_o, 4))
X = np.r_[normal, fraud]
y = np.r_[np.zeros(n_t, int), np.ones(n_o, int)]
order = rng.permutation(len(y))
with open(work / "transactions.csv", "w") as fh:
    fh.write("Time,V1,V2,V3,V4,Class\n")
    for t, i in enumerate(order):
        fh.write(f"{t}," + ",".join(f"{float(v)!r}" for v in X[i]) + f",{y[i]}\n")

# %% config: resample to 300 normal / 40 fraud rows, small grid
(work / "run.cfg").write_text(
    "seed = 0\n"
    "models = svdd, gessvdd-knn-g-min, svdd-rbf\n"
    "dataset.demo.path = transactions.csv\n"
    "dataset.demo.label = Class\n"
    "dataset.demo.drop = Time\n"
    "dataset.demo.n_target = 300\n"
    "dataset.demo.n_outlier = 40\n"
    "grid.C = 0.1, 0.3\n"
    "grid.d = 1, 2\n"
    "grid.eta = 0.1\n"
    "grid.sigma = 1, 10\n"
)

# %% train one model, then score the full table with it
cfg = str(work / "run.cfg")
out = work / "out"
main(["train", "--config", cfg, "--model", "gessvdd-knn-g-min", "--out", str(out)])
main(["score", str(work / "transactions.csv"), "--model",
      str(out / "gessvdd-knn-g-min__demo.model.json"), "--out", str(work / "scored.csv")])

# %% the full benchmark, then the stored report
code = main(["benchmark", "--config", cfg, "--out", str(out)])
main(["report", "--out", str(out)])
print("outputs in", work)
sys.exit(code)
