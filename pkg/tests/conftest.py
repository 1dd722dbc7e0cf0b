import numpy as np
import pytest

from milac_sim import ScatteringMatrix, sym_unitary_project


def random_complex(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_complex_symmetric(rng, n):
    a = random_complex(rng, (n, n))
    return (a + a.T) / 2


def random_unitary(rng, n):
    q, r = np.linalg.qr(random_complex(rng, (n, n)))
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_symmetric_unitary(rng, n):
    q = random_unitary(rng, n)
    return q @ q.T


def random_scattering(rng, k, l):
    theta = sym_unitary_project(random_complex(rng, (k + l, k + l)))
    return ScatteringMatrix(theta=theta, k=k, l=l)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
