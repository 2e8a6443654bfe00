import numpy as np
import pytest

from oracles import ring_problem


def write_ring_csv(path, seed=0, n_target=160, n_outlier=60):
    """Fraud-style CSV: an unused Time column, features V1..V2, Class label."""
    X, y, _, _ = ring_problem(seed, n_train=n_target, n_out_train=n_outlier, n_test=0, n_out_test=0)
    rng = np.random.default_rng(seed + 1)
    order = rng.permutation(len(y))
    with open(path, "w") as fh:
        fh.write("Time,V1,V2,Class\n")
        for t, i in enumerate(order):
            fh.write(f"{t},{float(X[i, 0])!r},{float(X[i, 1])!r},{y[i]}\n")
    return path


@pytest.fixture
def ring_config(tmp_path):
    csv_path = write_ring_csv(tmp_path / "ring.csv")
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "seed = 3\n"
        "models = svdd, gessvdd-knn-g-min, svdd-rbf\n"
        "folds = 3\n"
        "dataset.ring.path = ring.csv\n"
        "dataset.ring.label = Class\n"
        "dataset.ring.drop = Time\n"
        "dataset.ring.n_target = 80\n"
        "dataset.ring.n_outlier = 20\n"
        "grid.C = 0.1, 0.3\n"
        "grid.d = 1, 2\n"
        "grid.eta = 0.1\n"
        "grid.sigma = 10, 100\n"
    )
    return cfg, csv_path


ACCEPTANCE = []


@pytest.fixture
def gate():
    """Record an acceptance outcome (printed in the summary), then enforce it."""

    def check(number, ok, detail):
        ACCEPTANCE.append((number, "PASS" if ok else "FAIL", detail))
        assert ok, f"criterion {number}: {detail}"

    return check


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {detail}")
