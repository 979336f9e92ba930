"""Shared builders for the test suite."""
import numpy as np
import pytest

import locp
from locp.gen import block_matrix_units


def full_algebra(n: int):
    """Full matrix algebra on the single-level flag of dimension n."""
    flag = locp.make_flag(n, [n])
    return flag, locp.build_algebra(flag, block_matrix_units(flag))


def diag_algebra(dims):
    """Diagonal algebra on a flag with the given level dims."""
    n = dims[-1]
    flag = locp.make_flag(n, dims)
    alg = locp.build_algebra(flag, [np.diag(np.arange(1.0, n + 1.0))])
    return flag, alg


def identity_map(alg):
    """The identity map of an algebra, images = basis."""
    return locp.make_map(alg, alg.domain, list(alg.basis))


def random_block_unitary(rng, flag):
    """A random unitary compatible with the flag (canonical coordinates)."""
    u = np.zeros((flag.ambient, flag.ambient), dtype=np.complex128)
    prev = 0
    for k in flag.dims:
        if k > prev:
            g = (rng.standard_normal((k - prev, k - prev))
                 + 1j * rng.standard_normal((k - prev, k - prev)))
            q, r = np.linalg.qr(g)
            u[prev:k, prev:k] = q * (np.diag(r) / np.abs(np.diag(r)))
        prev = max(prev, k)
    return u


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
