import numpy as np
import pytest

from pairlik.dataset import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_dataset(seed, n=8, p=2, ties=False):
    r = np.random.default_rng(seed)
    x = r.standard_normal((n, p))
    y = r.standard_normal(n)
    if ties:
        y[: n // 2] = y[0]
    return Dataset(x, y)


def random_unit(seed, p):
    r = np.random.default_rng(seed)
    b = r.standard_normal(p)
    return b / np.linalg.norm(b)
