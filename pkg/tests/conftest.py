import numpy as np
import pytest

from matmart import _kernels
from matmart.symmat import SymMat


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT compilation once so timed tests measure steady state."""
    a = np.array([[1.0, 0.2], [0.2, -0.5]])
    _kernels.jacobi_eigh(a)
    _kernels.eigh_stack(a[None])
    _kernels.eigvalsh_stack(a[None])
    stack = np.stack([a, np.eye(2)])
    sq_w, sq_q = _kernels.eigh_stack(np.einsum("kij,kjl->kil", stack, stack))
    for kind in (0, 1, 2):
        _kernels.tail_stats(kind, stack, sq_w, sq_q, 0.3, 0.9, 0.1, 2, 1, 0, 4)
        _kernels.s_final(kind, stack, sq_w, sq_q, 0.3, 0.9, 0.1, 0.4,
                         np.zeros((2, 2)), 1, 0, 4)
        _kernels.stopped_scan(kind, stack, sq_w, sq_q, 0.3, 0.9, 0.1, 0.4, 0.5,
                              np.full(3, 1.0), np.ones(3, dtype=np.uint8),
                              np.zeros((2, 2, 2)), -0.1, 1, 0, 4)
    _kernels.cond_gauss_s(np.zeros((2, 2)), a, 0.4, 1, 0, 4)


def random_symmetric(rs, d, scale=1.0):
    a = rs.normal(size=(d, d)) * scale
    return SymMat((a + a.T) / 2.0)


def random_with_spectrum(rs, d, low, high):
    """Symmetric matrix with eigenvalues drawn uniformly from [low, high]."""
    q = np.linalg.qr(rs.normal(size=(d, d)))[0]
    ev = rs.uniform(low, high, size=d)
    return SymMat(q @ np.diag(ev) @ q.T)


def random_psd(rs, d, scale=1.0):
    g = rs.normal(size=(d, d)) * scale
    return SymMat(g.T @ g / d)
