import numpy as np
import pytest

from specpert.models import AsymptoticLaw, build_diagonal_K

PI = np.pi


@pytest.fixture(scope="session")
def law():
    return AsymptoticLaw(PI, -PI / 2, 2.0, 1.0)


@pytest.fixture(scope="session")
def K500(law):
    return build_diagonal_K(law, 500)


def random_spd(n, seed=0, shift=1.0):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, n))
    return m @ m.T / n + shift * np.eye(n)


def random_sym(n, seed=0):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, n))
    return (m + m.T) / 2
