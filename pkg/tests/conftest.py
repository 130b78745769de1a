import itertools

import numpy as np
import pytest

from protes import TensorTrain


def brute_element(cores, x):
    """Sum over every rank-index path, one scalar product at a time."""
    ranks = [c.shape[0] for c in cores] + [1]
    total = 0.0
    for path in itertools.product(*(range(r) for r in ranks[1:-1])):
        r = (0,) + path + (0,)
        term = 1.0
        for i, c in enumerate(cores):
            term *= c[r[i], x[i], r[i + 1]]
        total += term
    return total


def brute_full(cores):
    shape = tuple(c.shape[1] for c in cores)
    out = np.empty(shape)
    for x in itertools.product(*(range(n) for n in shape)):
        out[x] = brute_element(cores, x)
    return out


def random_tt(rng, d, max_n=4, max_r=3, positive=False):
    shape = rng.integers(1, max_n + 1, d)
    ranks = [1] + list(rng.integers(1, max_r + 1, d - 1)) + [1]
    cores = []
    for i in range(d):
        size = (ranks[i], shape[i], ranks[i + 1])
        cores.append(rng.random(size) if positive else rng.normal(size=size))
    return TensorTrain(cores)


@pytest.fixture
def rng():
    return np.random.default_rng(20231016)
