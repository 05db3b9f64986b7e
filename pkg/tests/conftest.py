import numpy as np
import pytest

from locsur.blackbox import RandomForestParams, train_random_forest
from locsur.data import Dataset, generate_half_moons, train_test_split


@pytest.fixture(scope="session")
def moons():
    return generate_half_moons(1000, 0.3, 1)


@pytest.fixture(scope="session")
def moons_split(moons):
    return train_test_split(moons, 0.2, 1)


@pytest.fixture(scope="session")
def small_forest(moons_split):
    train, _ = moons_split
    return train_random_forest(train, RandomForestParams(n_trees=25, seed=3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def blobs(n=60, gap=4.0, seed=0):
    g = np.random.default_rng(seed)
    X = np.vstack([g.normal(-gap, 1.0, (n // 2, 2)), g.normal(gap, 1.0, (n - n // 2, 2))])
    y = np.r_[np.zeros(n // 2), np.ones(n - n // 2)]
    return Dataset(X, y)
