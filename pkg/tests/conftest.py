import numpy as np
import pytest

from lop.dataset import LabeledDataset


def gaussian_classes(rng, counts, p, shift=3.0):
    """Gaussian classes with means ``shift * e_g``; labels 1..G."""
    X, y = [], []
    for g, n in enumerate(counts, start=1):
        mu = np.zeros(p)
        mu[(g - 1) % p] = shift
        X.append(rng.standard_normal((n, p)) + mu)
        y.append(np.full(n, g))
    return np.vstack(X), np.concatenate(y)


def two_gaussians_flat(rng, n_per_class, p=200, distance=6.0):
    """Two identity-covariance classes whose means are ``distance`` apart."""
    direction = np.ones(p) / np.sqrt(p)
    X = rng.standard_normal((2 * n_per_class, p))
    y = np.repeat([1, 2], n_per_class)
    X[y == 2] += distance * direction
    return X, y


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def olitos_like(tmp_path):
    """Synthetic table shaped like the olive-oil data: 120 rows, 25 features, classes 50/25/34/11."""
    rng = np.random.default_rng(7)
    X, y = gaussian_classes(rng, (50, 25, 34, 11), 25)
    path = tmp_path / "olitos.csv"
    with path.open("w") as fh:
        fh.write(",".join(f"f{j}" for j in range(25)) + ",grp\n")
        for row, lab in zip(X, y):
            fh.write(",".join(repr(float(v)) for v in row) + f",{lab}\n")
    return path


@pytest.fixture
def small_ds():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0],
                  [5.0, 5.0], [6.0, 5.0], [5.0, 6.5], [6.2, 6.1]])
    return LabeledDataset(X, np.array([1, 1, 1, 1, 2, 2, 2, 2]))


acceptance_lines = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[acceptance_lines] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(acceptance_lines, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
