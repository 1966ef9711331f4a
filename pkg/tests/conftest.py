import numpy as np
import pytest

from artifact.instance import make_instance, parse_instance

TRIANGLE_K3 = "lin2k 3 3\nI 1 2 1 0\nI 2 3 1 0\nI 1 3 1 0\n"
TRIANGLE_K2 = "lin2k 2 3\nI 1 2 1 0\nI 2 3 1 0\nI 1 3 1 0\n"


@pytest.fixture
def tri3():
    return parse_instance(TRIANGLE_K3)


@pytest.fixture
def tri2():
    return parse_instance(TRIANGLE_K2)


def random_homogeneous(rng, n_max=6, ks=(3, 4), density=0.6):
    n = int(rng.integers(2, n_max + 1))
    k = int(rng.choice(ks))
    raw = [
        (i, j, float(rng.uniform(0.1, 2.0)), 0, str(rng.choice(["E", "I"])))
        for i in range(1, n + 1)
        for j in range(i + 1, n + 1)
        if rng.random() < density
    ]
    if not raw:
        raw = [(1, 2, 1.0, 0, "I")]
    return make_instance(k, n, raw)


def unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)
