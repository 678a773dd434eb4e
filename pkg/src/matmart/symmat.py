"""Dense real symmetric matrix algebra.

Everything downstream (bound evaluation, path simulation, the exponential
process) works with real symmetric matrices: martingale states, predictable
variations, tilted log terms.  This module provides the carrier type,
a deterministic cyclic-Jacobi eigensolver, matrix functions defined through
the spectral mapping (exp, log, integer powers), and semidefinite-order
predicates.

All operations are pure; :class:`SymMat` and :class:`SpectralDecomp` hold
read-only arrays and are safe to share across threads.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConvergenceError, DimensionMismatchError, NotPositiveDefiniteError

SYMMETRY_RTOL = 1e-12
LOG_DOMAIN_CUTOFF = 1e-12


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


class SymMat:
    """Immutable dense real symmetric d x d matrix.

    The constructor validates finiteness and symmetry up to
    ``1e-12 * (1 + max|entry|)`` and then symmetrizes via ``(A + A^T)/2``,
    absorbing roundoff drift from products.
    """

    __slots__ = ("_a",)

    def __init__(self, entries):
        a = np.asarray(entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
        if a.size and not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        scale = 1.0 + (np.abs(a).max() if a.size else 0.0)
        asym = np.abs(a - a.T).max() if a.size else 0.0
        if asym > SYMMETRY_RTOL * scale:
            raise ValueError(
                f"matrix is not symmetric: max |a_ij - a_ji| = {asym:.3e} "
                f"exceeds {SYMMETRY_RTOL * scale:.3e}"
            )
        self._a = _readonly((a + a.T) / 2.0)

    @classmethod
    def _wrap(cls, a):
        """Internal: wrap an array already known to be exactly symmetric."""
        obj = cls.__new__(cls)
        obj._a = _readonly(a)
        return obj

    @classmethod
    def zeros(cls, dim):
        return cls._wrap(np.zeros((dim, dim)))

    @classmethod
    def identity(cls, dim):
        return cls._wrap(np.eye(dim))

    @classmethod
    def diag(cls, values):
        return cls._wrap(np.diag(np.asarray(values, dtype=np.float64)))

    @property
    def dim(self):
        return self._a.shape[0]

    @property
    def entries(self):
        """The underlying (read-only) ndarray; no copy."""
        return self._a

    def __add__(self, other):
        if isinstance(other, SymMat):
            self._check_dim(other)
            return SymMat._wrap(self._a + other._a)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SymMat):
            self._check_dim(other)
            return SymMat._wrap(self._a - other._a)
        return NotImplemented

    def __mul__(self, scalar):
        return SymMat._wrap(self._a * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return SymMat._wrap(-self._a)

    def _check_dim(self, other):
        if self.dim != other.dim:
            raise DimensionMismatchError(
                f"dimension mismatch: {self.dim} vs {other.dim}"
            )

    def __repr__(self):
        return f"SymMat({self._a.tolist()!r})"


@dataclass(frozen=True)
class SpectralDecomp:
    """Eigenvalues in ascending order and orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def eig_sym(a: SymMat) -> SpectralDecomp:
    """Spectral decomposition by cyclic Jacobi rotations.

    Deterministic for identical input (fixed sweep order, stable ascending
    sort).  Raises :class:`ConvergenceError` with the off-diagonal residual
    if the sweep limit is hit.
    """
    w, v, off, converged = _kernels.jacobi_eigh(a.entries)
    if not converged:
        raise ConvergenceError(off, _kernels.JACOBI_MAX_SWEEPS)
    return SpectralDecomp(eigenvalues=_readonly(w), eigenvectors=_readonly(v))


def _eigvals(a: SymMat):
    w, off, converged = _kernels.jacobi_eigvalsh(a.entries)
    if not converged:
        raise ConvergenceError(off, _kernels.JACOBI_MAX_SWEEPS)
    return w


def _apply_spectral(a: SymMat, fn) -> SymMat:
    dec = eig_sym(a)
    q = dec.eigenvectors
    out = (q * fn(dec.eigenvalues)) @ q.T
    return SymMat._wrap((out + out.T) / 2.0)


def mat_exp(a: SymMat) -> SymMat:
    """Matrix exponential Q diag(e^lambda_i) Q^T; symmetric positive definite."""
    return _apply_spectral(a, np.exp)


def mat_log(a: SymMat) -> SymMat:
    """Matrix logarithm of a positive definite matrix.

    Requires lambda_min > 1e-12 (absolute); near-singular inputs signal a
    caller error and raise :class:`NotPositiveDefiniteError`.
    """
    dec = eig_sym(a)
    lam_min = dec.eigenvalues[0]
    if lam_min <= LOG_DOMAIN_CUTOFF:
        raise NotPositiveDefiniteError(lam_min, LOG_DOMAIN_CUTOFF)
    q = dec.eigenvectors
    out = (q * np.log(dec.eigenvalues)) @ q.T
    return SymMat._wrap((out + out.T) / 2.0)


def mat_int_pow(a: SymMat, p: int) -> SymMat:
    """p-th power by repeated multiplication; p = 0 gives the identity."""
    if p < 0 or p != int(p):
        raise ValueError(f"power must be a nonnegative integer, got {p!r}")
    d = a.dim
    out = np.eye(d)
    for _ in range(int(p)):
        out = out @ a.entries
    return SymMat._wrap((out + out.T) / 2.0)


def lambda_max(a: SymMat) -> float:
    """Largest eigenvalue."""
    return float(_eigvals(a)[-1])


def lambda_min(a: SymMat) -> float:
    """Smallest eigenvalue."""
    return float(_eigvals(a)[0])


def spectral_norm(a: SymMat) -> float:
    """Largest singular value; for symmetric input, max_i |lambda_i|."""
    w = _eigvals(a)
    return float(max(abs(w[0]), abs(w[-1])))


def default_psd_tol(a: SymMat, b: SymMat) -> float:
    return 1e-10 * (1.0 + spectral_norm(a) + spectral_norm(b))


def psd_order_leq(a: SymMat, b: SymMat, tol: float | None = None) -> bool:
    """Semidefinite order test: a <= b iff lambda_min(b - a) >= -tol.

    Default tolerance is ``1e-10 * (1 + ||a|| + ||b||)`` in spectral norm.
    """
    a._check_dim(b)
    if tol is None:
        tol = default_psd_tol(a, b)
    return lambda_min(b - a) >= -tol


def trace(a: SymMat) -> float:
    """Sum of diagonal entries."""
    return float(np.trace(a.entries))
