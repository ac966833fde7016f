import numpy as np
import pytest


def crandn(rng, *shape):
    """Circularly-symmetric complex Gaussian entries, unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_hermitian(rng, n, scale=1.0):
    A = crandn(rng, n, n)
    return scale * 0.5 * (A + A.conj().T)


def random_psd(rng, n, trace=None):
    A = crandn(rng, n, n)
    M = A @ A.conj().T
    if trace is not None:
        M *= trace / np.trace(M).real
    return M


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
